#include <fixtures.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace simtutor;
using namespace simtutor::testing;

namespace {

Questionnaire one_per_style() {
  Questionnaire q;
  for (auto s : kAllStyles) q.items.push_back({std::string(to_string(s)), "prompt", s});
  return q;
}

LearnerModel with_scores(const KnowledgeBase& kb, const std::vector<int>& scores) {
  LearnerModel m;
  m.learner_id = "x";
  const auto& cid = kb.concepts().begin()->first;
  for (int s : scores) m = update_after_posttest(std::move(m), kb, cid, s);
  return m;
}

}  // namespace

TEST(Questionnaire, SymmetricTieGoesToFirstStyle) {
  auto q = shipped_questionnaire();
  std::map<std::string, int> r;
  for (const auto& item : q.items) r[item.id] = 3;
  auto p = score_questionnaire(q, r);
  for (auto s : kAllStyles) EXPECT_EQ(p.scores.at(s), 9);
  EXPECT_EQ(p.dominant, LearningStyle::SS);
}

TEST(Questionnaire, UniqueMaximumWins) {
  auto q = one_per_style();
  std::map<std::string, int> r;
  for (const auto& item : q.items) r[item.id] = item.target_style == LearningStyle::GOA ? 5 : 1;
  EXPECT_EQ(score_questionnaire(q, r).dominant, LearningStyle::GOA);
}

TEST(Questionnaire, MatchesResummationOracle) {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    Questionnaire q;
    for (int i = 0; i < 10; ++i)
      q.items.push_back({"i" + std::to_string(i), "p", kAllStyles[i < 5 ? i : gen() % 5]});
    std::map<std::string, int> r;
    for (const auto& item : q.items) r[item.id] = 1 + static_cast<int>(gen() % 5);

    std::map<LearningStyle, int> oracle;
    int total = 0;
    for (auto s : kAllStyles) oracle[s] = 0;
    for (const auto& item : q.items) {
      oracle[item.target_style] += r.at(item.id);
      total += r.at(item.id);
    }
    LearningStyle best = LearningStyle::SS;
    for (auto s : kAllStyles)
      if (oracle[s] > oracle[best]) best = s;

    auto p = score_questionnaire(q, r);
    EXPECT_EQ(p.scores, oracle);
    EXPECT_EQ(p.dominant, best);
    int sum = 0;
    for (const auto& [s, v] : p.scores) sum += v;
    EXPECT_EQ(sum, total);
  }
}

TEST(Questionnaire, ResponseErrors) {
  auto q = one_per_style();
  std::map<std::string, int> r;
  for (const auto& item : q.items) r[item.id] = 3;
  auto code_of = [&](std::map<std::string, int> resp) {
    try {
      score_questionnaire(q, resp);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Parse;
  };
  auto missing = r;
  missing.erase("ca");
  EXPECT_EQ(code_of(missing), ErrorCode::MissingResponse);
  auto high = r;
  high["ss"] = 6;
  EXPECT_EQ(code_of(high), ErrorCode::OutOfRangeResponse);
  auto low = r;
  low["ss"] = 0;
  EXPECT_EQ(code_of(low), ErrorCode::OutOfRangeResponse);
  auto extra = r;
  extra["bogus"] = 3;
  EXPECT_EQ(code_of(extra), ErrorCode::UnknownItem);
}

TEST(Questionnaire, ShippedFileCoversEveryStyle) {
  auto q = shipped_questionnaire();
  EXPECT_EQ(q.items.size(), 15u);
  EXPECT_NO_THROW(validate_questionnaire(q));
  Questionnaire missing_style;
  missing_style.items.push_back({"only", "p", LearningStyle::CA});
  EXPECT_THROW(validate_questionnaire(missing_style), ValidationError);
}

TEST(Classify, PublishedBandEdges) {
  EXPECT_EQ(classify_knowledge(86), KnowledgeLevel::Excellent);
  EXPECT_EQ(classify_knowledge(100), KnowledgeLevel::Excellent);
  EXPECT_EQ(classify_knowledge(85), KnowledgeLevel::VeryGood);
  EXPECT_EQ(classify_knowledge(71), KnowledgeLevel::VeryGood);
  EXPECT_EQ(classify_knowledge(70), KnowledgeLevel::Good);
  EXPECT_EQ(classify_knowledge(51), KnowledgeLevel::Good);
  EXPECT_EQ(classify_knowledge(50), KnowledgeLevel::Average);
  EXPECT_EQ(classify_knowledge(31), KnowledgeLevel::Average);
  EXPECT_EQ(classify_knowledge(30), KnowledgeLevel::Weak);
  EXPECT_EQ(classify_knowledge(0), KnowledgeLevel::Weak);
}

TEST(Classify, TotalMonotoneAndMatchesIntervalOracle) {
  auto prev = KnowledgeLevel::Weak;
  for (int s = 0; s <= 100; ++s) {
    auto level = classify_knowledge(s);
    EXPECT_EQ(std::string(to_string(level)), band_oracle(s)) << s;
    EXPECT_GE(level, prev);
    prev = level;
  }
  EXPECT_THROW(classify_knowledge(-1), Error);
  EXPECT_THROW(classify_knowledge(101), Error);
}

TEST(Update, ScoresLevelsAttemptsAndEvents) {
  auto kb = sample_kb();
  LearnerModel m;
  m.learner_id = "u";
  m = update_after_posttest(std::move(m), *kb, "addition", 90);
  EXPECT_EQ(m.concept_knowledge.at("addition").level, KnowledgeLevel::Excellent);
  EXPECT_EQ(m.concept_knowledge.at("addition").attempts, 1);
  const auto n = m.events.size();
  m = update_after_posttest(std::move(m), *kb, "addition", 40);
  EXPECT_EQ(m.concept_knowledge.at("addition").last_score, 40);
  EXPECT_EQ(m.concept_knowledge.at("addition").level, KnowledgeLevel::Average);
  EXPECT_EQ(m.concept_knowledge.at("addition").attempts, 2);
  EXPECT_EQ(m.events.size(), n + 1);
  EXPECT_EQ(m.events.back().kind, "post_test");
  try {
    update_after_posttest(m, *kb, "no-such-concept", 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownConcept);
  }
}

TEST(LearnerLevelDerivation, Examples) {
  auto kb = sample_kb();
  EXPECT_EQ(derive_learner_level(LearnerModel{}), LearnerLevel::SlowLearner);
  EXPECT_EQ(with_scores(*kb, {90, 95}).level, LearnerLevel::Genius);
  EXPECT_EQ(with_scores(*kb, {40}).level, LearnerLevel::SlowLearner);
  EXPECT_EQ(with_scores(*kb, {10, 20}).level, LearnerLevel::Weak);
  EXPECT_EQ(with_scores(*kb, {60, 70}).level, LearnerLevel::Smart);
  // Only the last five count.
  EXPECT_EQ(with_scores(*kb, {0, 0, 0, 90, 90, 90, 90, 90}).level, LearnerLevel::Genius);
}

TEST(LearnerLevelDerivation, MonotoneInEveryWindowScore) {
  auto kb = sample_kb();
  std::mt19937 gen(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> scores(1 + gen() % 5);
    for (auto& s : scores) s = static_cast<int>(gen() % 101);
    const auto base = with_scores(*kb, scores).level;
    auto raised = scores;
    auto& pick = raised[gen() % raised.size()];
    pick = std::min(100, pick + 1 + static_cast<int>(gen() % 30));
    EXPECT_GE(with_scores(*kb, raised).level, base);
  }
}

TEST(Aggregate, TopicMeans) {
  Topic one{"t", "T", {"a"}};
  Topic two{"t", "T", {"a", "b"}};
  LearnerModel m;
  m.concept_knowledge["a"] = {70, KnowledgeLevel::Good, 1};
  EXPECT_EQ(aggregate_topic_knowledge(m, one), 70);
  EXPECT_EQ(aggregate_topic_knowledge(m, two), 35);
  m.concept_knowledge["a"] = {80, KnowledgeLevel::VeryGood, 1};
  EXPECT_EQ(aggregate_topic_knowledge(m, two), 40);
  m.concept_knowledge["b"] = {60, KnowledgeLevel::Good, 1};
  EXPECT_EQ(aggregate_topic_knowledge(m, two), 70);
  m.concept_knowledge["b"] = {61, KnowledgeLevel::Good, 1};
  EXPECT_EQ(aggregate_topic_knowledge(m, two), 71);  // 70.5 rounds up
}
