#include <fixtures.hpp>

#include <gtest/gtest.h>

using namespace simtutor;
using namespace simtutor::testing;

namespace {

struct Harness {
  std::shared_ptr<const KnowledgeBase> kb = make_kb(linear_kb_doc({{"a", {}}, {"b", {"a"}}}, 2, 8));
  Questionnaire q = shipped_questionnaire();
  std::vector<LearnerModel> saved;

  Session start(LearnerModel m = fresh()) {
    std::int64_t t = 0;
    return Session(kb, PedagogyConfig{}, q, std::move(m), [t]() mutable { return t++; },
                   [this](const LearnerModel& lm) { saved.push_back(lm); });
  }

  static LearnerModel fresh() {
    LearnerModel m;
    m.learner_id = "s";
    m.seed = 1234;
    return m;
  }
};

// Answers so that the weighted score is the largest achievable value <= target.
std::map<std::string, int> answers_for_score(const KnowledgeBase& kb, const TestPlan& plan, int target) {
  const std::size_t n = plan.question_ids.size();
  std::uint32_t best_mask = 0;
  int best = -1;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    int earned = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) earned += plan.weights[i];
    int score = static_cast<int>((200LL * earned + plan.total_weight) / (2LL * plan.total_weight));
    if (score <= target && score > best) best = score, best_mask = mask;
  }
  auto out = answer_all(kb, plan, false);
  for (std::size_t i = 0; i < n; ++i)
    if (best_mask >> i & 1) out[plan.question_ids[i]] = kb.question_at(plan.question_ids[i]).correct_index;
  return out;
}

void to_pre_test(Session& s, const Questionnaire& q) {
  s.submit_questionnaire(responses_for(q, LearningStyle::SS));
  s.advance();
}

}  // namespace

TEST(Session, FreshLearnerAwaitsQuestionnaire) {
  Harness h;
  auto s = h.start();
  EXPECT_EQ(s.state(), StateKind::AwaitQuestionnaire);
  EXPECT_EQ(s.step()["kind"], "questionnaire");
  EXPECT_EQ(s.step()["items"].size(), h.q.items.size());
}

TEST(Session, ReturningLearnerSkipsQuestionnaire) {
  Harness h;
  auto m = Harness::fresh();
  m.style = StyleProfile{};
  auto s = h.start(m);
  EXPECT_EQ(s.state(), StateKind::SelectingConcept);
}

TEST(Session, EverythingMasteredCompletes) {
  Harness h;
  auto m = Harness::fresh();
  m.style = StyleProfile{};
  m.concept_knowledge["a"] = {90, KnowledgeLevel::Excellent, 1};
  m.concept_knowledge["b"] = {60, KnowledgeLevel::Good, 1};
  auto s = h.start(m);
  auto step = s.advance();
  EXPECT_EQ(s.state(), StateKind::Completed);
  EXPECT_EQ(step["kind"], "completion");
  EXPECT_EQ(step["topics"][0]["score"], 75);
}

TEST(Session, QuestionnaireHappyPathAndGuards) {
  Harness h;
  auto s = h.start();
  auto partial = responses_for(h.q, LearningStyle::CA);
  partial.erase(partial.begin());
  const auto events = s.model().events.size();
  try {
    s.submit_questionnaire(partial);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingResponse);
  }
  EXPECT_EQ(s.state(), StateKind::AwaitQuestionnaire);
  EXPECT_EQ(s.model().events.size(), events);

  s.submit_questionnaire(responses_for(h.q, LearningStyle::CA));
  EXPECT_EQ(s.state(), StateKind::SelectingConcept);
  EXPECT_EQ(s.model().style->dominant, LearningStyle::CA);
  EXPECT_FALSE(h.saved.empty());
  EXPECT_EQ(h.saved.back(), s.model());

  s.advance();
  try {
    s.submit_questionnaire(responses_for(h.q, LearningStyle::CA));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongState);
  }
}

TEST(Session, PreTestPlanSatisfiesRules) {
  Harness h;
  auto s = h.start();
  s.submit_questionnaire(responses_for(h.q, LearningStyle::SS));
  const auto before = s.model();
  auto step = s.advance();
  ASSERT_EQ(s.state(), StateKind::AwaitPreTest);
  EXPECT_EQ(step["concept_id"], "a");
  EXPECT_TRUE(audit_plan(*h.kb, before, *s.plan()).empty());
  EXPECT_EQ(step.dump().find("correct_index"), std::string::npos);
}

TEST(Session, HighPreTestSkipsPresentation) {
  Harness h;
  auto s = h.start();
  to_pre_test(s, h.q);
  auto out = s.submit_answers(answer_all(*h.kb, *s.plan(), true));
  EXPECT_EQ(out.graded.score, 100);
  EXPECT_EQ(out.gate->kind, GateDecision::Kind::Skip);
  EXPECT_EQ(s.state(), StateKind::SelectingConcept);
  EXPECT_EQ(s.model().concept_knowledge.at("a").level, KnowledgeLevel::Excellent);
  for (const auto& e : s.transcript()) EXPECT_NE(e.kind, "enter:presenting");
}

TEST(Session, TrainPresentThenPostTestDisjoint) {
  Harness h;
  auto s = h.start();
  to_pre_test(s, h.q);
  const auto pre = *s.plan();
  auto out = s.submit_answers(answers_for_score(*h.kb, pre, 60));
  ASSERT_EQ(out.gate->kind, GateDecision::Kind::Train);
  ASSERT_EQ(s.state(), StateKind::Presenting);
  EXPECT_EQ(*s.method(), EducationMethod::Game);
  EXPECT_EQ(s.step()["asset"], "a/game");
  s.advance();
  ASSERT_EQ(s.state(), StateKind::AwaitPostTest);
  for (const auto& id : s.plan()->question_ids)
    EXPECT_EQ(std::find(pre.question_ids.begin(), pre.question_ids.end(), id), pre.question_ids.end());
}

TEST(Session, FailedPostTestRetainsConceptAndRotatesMethod) {
  Harness h;
  auto s = h.start();
  to_pre_test(s, h.q);
  s.submit_answers(answers_for_score(*h.kb, *s.plan(), 60));
  const auto first_method = *s.method();
  s.advance();
  auto out = s.submit_answers(answers_for_score(*h.kb, *s.plan(), 40));
  EXPECT_EQ(out.graded.level, KnowledgeLevel::Average);
  EXPECT_EQ(s.model().concept_knowledge.at("a").attempts, 1);
  EXPECT_EQ(s.state(), StateKind::SelectingConcept);
  auto step = s.advance();
  EXPECT_EQ(step["concept_id"], "a");
  s.submit_answers(answers_for_score(*h.kb, *s.plan(), 60));
  ASSERT_EQ(s.state(), StateKind::Presenting);
  EXPECT_NE(*s.method(), first_method);
  EXPECT_EQ(*s.method(), default_preferences().rows.at(LearningStyle::SS)[1]);
}

TEST(Session, PassedPostTestMovesOn) {
  Harness h;
  auto s = h.start();
  to_pre_test(s, h.q);
  s.submit_answers(answers_for_score(*h.kb, *s.plan(), 60));
  s.advance();
  auto out = s.submit_answers(answers_for_score(*h.kb, *s.plan(), 70));
  EXPECT_TRUE(*out.mastered);
  EXPECT_EQ(s.model().concept_knowledge.at("a").level, KnowledgeLevel::Good);
  EXPECT_EQ(s.advance()["concept_id"], "b");
}

TEST(Session, GradingRules) {
  Harness h;
  TestPlan plan;
  plan.concept_id = "a";
  for (const auto& id : h.kb->questions_of("a")) {
    if (plan.question_ids.size() == 3) break;
    plan.question_ids.push_back(id);
  }
  plan.weights = {2, 1, 1};
  plan.total_weight = 4;
  auto all = answer_all(*h.kb, plan, true);
  auto none = answer_all(*h.kb, plan, false);
  EXPECT_EQ(grade_test(*h.kb, plan, all).score, 100);
  EXPECT_EQ(grade_test(*h.kb, plan, none).score, 0);
  auto first_only = none;
  first_only[plan.question_ids[0]] = all[plan.question_ids[0]];
  EXPECT_EQ(grade_test(*h.kb, plan, first_only).score, 50);

  auto missing = all;
  missing.erase(plan.question_ids[1]);
  auto code_of = [&](const std::map<std::string, int>& a) {
    try {
      grade_test(*h.kb, plan, a);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Parse;
  };
  EXPECT_EQ(code_of(missing), ErrorCode::MissingAnswer);
  auto foreign = all;
  foreign["b-s0-easy-0"] = 0;
  EXPECT_EQ(code_of(foreign), ErrorCode::UnknownQuestion);
  auto range = all;
  range[plan.question_ids[2]] = 9;
  EXPECT_EQ(code_of(range), ErrorCode::InvalidAnswer);
}

TEST(Session, RejectedSubmitLeavesStateUntouched) {
  Harness h;
  auto s = h.start();
  to_pre_test(s, h.q);
  const auto model = s.model();
  const auto plan = *s.plan();
  const auto saves = h.saved.size();
  auto bad = answer_all(*h.kb, plan, true);
  bad.erase(bad.begin());
  EXPECT_THROW(s.submit_answers(bad), Error);
  EXPECT_THROW(s.advance(), Error);
  EXPECT_EQ(s.model(), model);
  EXPECT_EQ(*s.plan(), plan);
  EXPECT_EQ(s.state(), StateKind::AwaitPreTest);
  EXPECT_EQ(h.saved.size(), saves);
}

TEST(Session, FailedPersistenceRollsBack) {
  Harness h;
  bool fail = false;
  Session s(h.kb, PedagogyConfig{}, h.q, Harness::fresh(), [] { return 0; },
            [&fail](const LearnerModel&) {
              if (fail) throw Error(ErrorCode::Storage, "disk full");
            });
  s.submit_questionnaire(responses_for(h.q, LearningStyle::SS));
  fail = true;
  const auto model = s.model();
  EXPECT_THROW(s.advance(), Error);
  EXPECT_EQ(s.state(), StateKind::SelectingConcept);
  EXPECT_EQ(s.model(), model);
}

TEST(Session, PresentingPrecededByTrainAndNoQuestionGradedTwice) {
  Harness h;
  h.kb = make_kb(linear_kb_doc({{"a", {}}, {"b", {"a"}}}, 2, 30));
  auto s = h.start();
  s.submit_questionnaire(responses_for(h.q, LearningStyle::DLA));
  const int targets[] = {20, 60, 30, 60, 80, 95, 60, 55};
  int i = 0;
  while (s.state() != StateKind::Completed && i < 40) {
    switch (s.state()) {
      case StateKind::SelectingConcept:
      case StateKind::Presenting:
        s.advance();
        break;
      default:
        s.submit_answers(answers_for_score(*h.kb, *s.plan(), targets[i++ % 8]));
    }
  }
  EXPECT_EQ(s.state(), StateKind::Completed);
  std::set<std::string> graded;
  std::size_t presentations = 0;
  for (const auto& e : s.transcript()) {
    if (e.kind == "enter:presenting") {
      ++presentations;
      ASSERT_TRUE(e.detail.contains("graded"));
      EXPECT_EQ(e.detail["graded"]["phase"], "pre_test");
      EXPECT_EQ(e.detail["traces"][0]["rule"], "GATE.train");
    }
    if (e.kind.rfind("enter:", 0) == 0 && e.detail.contains("graded")) {
      for (const auto& q : e.detail["graded"]["questions"])
        EXPECT_TRUE(graded.insert(q["id"].get<std::string>()).second);
    }
  }
  EXPECT_GT(presentations, 0u);
}

TEST(Session, LegalTransitionTable) {
  using S = StateKind;
  const std::set<std::pair<S, S>> legal{{S::AwaitQuestionnaire, S::SelectingConcept},
                                        {S::SelectingConcept, S::AwaitPreTest},
                                        {S::SelectingConcept, S::Completed},
                                        {S::AwaitPreTest, S::Presenting},
                                        {S::AwaitPreTest, S::SelectingConcept},
                                        {S::Presenting, S::AwaitPostTest},
                                        {S::AwaitPostTest, S::SelectingConcept}};
  const S all[] = {S::AwaitQuestionnaire, S::SelectingConcept, S::AwaitPreTest,
                   S::Presenting,         S::AwaitPostTest,    S::Completed};
  for (auto a : all)
    for (auto b : all) EXPECT_EQ(is_legal_transition(a, b), legal.contains({a, b}));
}
