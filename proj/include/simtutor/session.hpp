#pragma once

// One learner's walk through the tutoring loop:
//
//   questionnaire -> select concept -> pre-test -> (gate) -> present -> post-test
//        ^_____________________________|________________________________|
//
// Every operation runs against a copy of the session core and commits only
// after the learner record has been persisted, so a rejected operation leaves
// the session exactly as it was.

#include <simtutor/errors.hpp>
#include <simtutor/kb.hpp>
#include <simtutor/learner.hpp>
#include <simtutor/pedagogy.hpp>
#include <simtutor/random.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace simtutor {

enum class StateKind {
  AwaitQuestionnaire,
  SelectingConcept,
  AwaitPreTest,
  Presenting,
  AwaitPostTest,
  Completed,
};

constexpr std::string_view to_string(StateKind k) {
  switch (k) {
    case StateKind::AwaitQuestionnaire: return "await_questionnaire";
    case StateKind::SelectingConcept: return "selecting_concept";
    case StateKind::AwaitPreTest: return "await_pre_test";
    case StateKind::Presenting: return "presenting";
    case StateKind::AwaitPostTest: return "await_post_test";
    case StateKind::Completed: return "completed";
  }
  return "completed";
}

constexpr bool is_legal_transition(StateKind from, StateKind to) {
  using S = StateKind;
  switch (from) {
    case S::AwaitQuestionnaire: return to == S::SelectingConcept;
    case S::SelectingConcept: return to == S::AwaitPreTest || to == S::Completed;
    case S::AwaitPreTest: return to == S::Presenting || to == S::SelectingConcept;
    case S::Presenting: return to == S::AwaitPostTest;
    case S::AwaitPostTest: return to == S::SelectingConcept;
    case S::Completed: return false;
  }
  return false;
}

struct GradedTest {
  TestPlan plan;
  std::map<std::string, int> answers;
  std::vector<bool> correct;  // parallel to plan.question_ids
  int score = 0;
  KnowledgeLevel level = KnowledgeLevel::Weak;

  friend bool operator==(const GradedTest&, const GradedTest&) = default;
};

// score = round-half-up(100 * correct weight / total weight)
inline GradedTest grade_test(const KnowledgeBase& kb, const TestPlan& plan,
                             const std::map<std::string, int>& answers) {
  for (const auto& [qid, choice] : answers)
    if (std::find(plan.question_ids.begin(), plan.question_ids.end(), qid) ==
        plan.question_ids.end())
      throw Error(ErrorCode::UnknownQuestion, "question '" + qid + "' is not part of this test", qid);
  GradedTest g;
  g.plan = plan;
  g.answers = answers;
  long long earned = 0;
  for (std::size_t i = 0; i < plan.question_ids.size(); ++i) {
    const auto& qid = plan.question_ids[i];
    auto it = answers.find(qid);
    if (it == answers.end())
      throw Error(ErrorCode::MissingAnswer, "no answer for question '" + qid + "'", qid);
    const Question& q = kb.question_at(qid);
    if (it->second < 0 || it->second >= static_cast<int>(q.choices.size()))
      throw Error(ErrorCode::InvalidAnswer, "choice index out of range for '" + qid + "'", qid);
    const bool ok = it->second == q.correct_index;
    g.correct.push_back(ok);
    if (ok) earned += plan.weights[i];
  }
  const long long total = plan.total_weight;
  g.score = total > 0 ? static_cast<int>((200 * earned + total) / (2 * total)) : 0;
  g.level = classify_knowledge(g.score);
  return g;
}

inline json to_json(const GradedTest& g) {
  json questions = json::array();
  for (std::size_t i = 0; i < g.plan.question_ids.size(); ++i) {
    const auto& qid = g.plan.question_ids[i];
    questions.push_back({{"id", qid},
                         {"chosen", g.answers.at(qid)},
                         {"correct", static_cast<bool>(g.correct[i])},
                         {"weight", g.plan.weights[i]}});
  }
  return {{"phase", to_string(g.plan.phase)},
          {"concept_id", g.plan.concept_id},
          {"score", g.score},
          {"level", to_string(g.level)},
          {"total_weight", g.plan.total_weight},
          {"questions", questions}};
}

using Clock = std::function<std::int64_t()>;
using Persist = std::function<void(const LearnerModel&)>;

inline std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

struct SubmitOutcome {
  GradedTest graded;
  std::optional<GateDecision> gate;      // pre-test only
  std::optional<bool> mastered;          // post-test only
  std::optional<EducationMethod> method; // set when training follows
  RuleTrace trace;
  StateKind next = StateKind::SelectingConcept;
};

inline json to_json(const SubmitOutcome& o) {
  json j{{"graded", to_json(o.graded)},
         {"score", o.graded.score},
         {"level", to_string(o.graded.level)},
         {"trace", to_json(o.trace)},
         {"next_state", to_string(o.next)}};
  if (o.gate) {
    j["decision"] = to_string(o.gate->kind);
    if (o.gate->kind == GateDecision::Kind::Remediate) j["prerequisite"] = o.gate->prerequisite;
  } else if (o.mastered) {
    j["decision"] = *o.mastered ? "mastered" : "retrain";
  }
  if (o.method) j["method"] = to_string(*o.method);
  return j;
}

class Session {
 public:
  Session(std::shared_ptr<const KnowledgeBase> kb, PedagogyConfig config, Questionnaire questionnaire,
          LearnerModel model, Clock clock = system_clock_ms, Persist persist = {})
      : kb_(std::move(kb)),
        config_(std::move(config)),
        questionnaire_(std::move(questionnaire)),
        clock_(clock ? std::move(clock) : Clock(system_clock_ms)),
        persist_(std::move(persist)) {
    core_.model = std::move(model);
    transcript_start_ = core_.model.events.size();
    enter(core_, core_.model.style ? StateKind::SelectingConcept : StateKind::AwaitQuestionnaire,
          {}, nullptr);
  }

  StateKind state() const { return core_.state; }
  const LearnerModel& model() const { return core_.model; }
  const KnowledgeBase& kb() const { return *kb_; }
  const PedagogyConfig& config() const { return config_; }
  const Questionnaire& questionnaire() const { return questionnaire_; }
  const std::optional<TestPlan>& plan() const { return core_.plan; }
  const std::string& concept_id() const { return core_.concept_id; }
  std::optional<EducationMethod> method() const { return core_.method; }

  // Events appended since the session started.
  std::span<const LearningEvent> transcript() const {
    return std::span<const LearningEvent>(core_.model.events).subspan(transcript_start_);
  }

  json transcript_json() const {
    json out = json::array();
    for (const auto& e : transcript()) out.push_back(to_json(e));
    return out;
  }

  // What the client should render now. Never includes answer keys.
  json step() const {
    json j{{"state", to_string(core_.state)}};
    const auto last = transcript().empty() ? json::array()
                                           : transcript().back().detail.value("traces", json::array());
    j["trace"] = last;
    switch (core_.state) {
      case StateKind::AwaitQuestionnaire: {
        json items = json::array();
        for (const auto& item : questionnaire_.items)
          items.push_back({{"id", item.id}, {"prompt", item.prompt}});
        j["kind"] = "questionnaire";
        j["items"] = items;
        j["scale"] = {{"min", kMinResponse}, {"max", kMaxResponse}};
        break;
      }
      case StateKind::SelectingConcept:
        j["kind"] = "selecting";
        break;
      case StateKind::AwaitPreTest:
      case StateKind::AwaitPostTest: {
        const auto& plan = *core_.plan;
        json questions = json::array();
        for (const auto& qid : plan.question_ids) {
          const auto& q = kb_->question_at(qid);
          questions.push_back({{"id", q.id},
                               {"section_id", q.section_id},
                               {"difficulty", to_string(q.difficulty)},
                               {"weight", q.weight},
                               {"body", q.body},
                               {"choices", q.choices}});
        }
        j["kind"] = "test";
        j["phase"] = to_string(plan.phase);
        j["concept_id"] = plan.concept_id;
        j["concept_title"] = kb_->concept_at(plan.concept_id).title;
        j["total_weight"] = plan.total_weight;
        j["questions"] = questions;
        break;
      }
      case StateKind::Presenting: {
        const auto& c = kb_->concept_at(core_.concept_id);
        j["kind"] = "presentation";
        j["concept_id"] = c.id;
        j["concept_title"] = c.title;
        j["method"] = to_string(*core_.method);
        j["asset"] = c.assets.at(*core_.method);
        j["attempt"] = training_attempt(core_.model, c.id);
        break;
      }
      case StateKind::Completed: {
        json topics = json::array();
        for (const auto& t : kb_->topics()) {
          const int score = aggregate_topic_knowledge(core_.model, t);
          topics.push_back({{"topic_id", t.id},
                            {"title", t.title},
                            {"score", score},
                            {"level", to_string(classify_knowledge(score))}});
        }
        j["kind"] = "completion";
        j["topics"] = topics;
        j["learner_level"] = to_string(core_.model.level);
        break;
      }
    }
    return j;
  }

  json advance() {
    Core next = core_;
    switch (next.state) {
      case StateKind::SelectingConcept: {
        RuleTrace trace;
        std::optional<std::string> pick;
        if (next.forced && !is_mastered(next.model, *next.forced)) {
          pick = next.forced;
          trace.push_back({"SEQ.forced", "'" + *pick + "' is held until it reaches the mastery bar"});
        } else {
          auto nc = next_concept(*kb_, next.model);
          pick = nc.concept_id;
          trace = std::move(nc.trace);
          next.forced.reset();
        }
        if (!pick) {
          enter(next, StateKind::Completed, trace, nullptr);
          break;
        }
        next.concept_id = *pick;
        auto [plan, plan_trace] = plan_for(next, TestPhase::PreTest);
        trace.insert(trace.end(), plan_trace.begin(), plan_trace.end());
        next.plan = std::move(plan);
        enter(next, StateKind::AwaitPreTest, trace, nullptr);
        break;
      }
      case StateKind::Presenting: {
        auto [plan, trace] = plan_for(next, TestPhase::PostTest);
        next.plan = std::move(plan);
        enter(next, StateKind::AwaitPostTest, trace, nullptr);
        break;
      }
      default:
        throw wrong_state("advance");
    }
    commit(std::move(next));
    return step();
  }

  void submit_questionnaire(const std::map<std::string, int>& responses) {
    if (core_.state != StateKind::AwaitQuestionnaire) throw wrong_state("submit_questionnaire");
    Core next = core_;
    auto profile = score_questionnaire(questionnaire_, responses);
    next.model.style = profile;
    next.model.events.push_back(
        {clock_(), "questionnaire", "", std::nullopt, json{{"profile", to_json(profile)}}});
    RuleTrace trace{{"STYLE.dominant", "dominant learning style is " +
                                           std::string(to_string(profile.dominant))}};
    enter(next, StateKind::SelectingConcept, trace, nullptr);
    commit(std::move(next));
  }

  SubmitOutcome submit_answers(const std::map<std::string, int>& answers) {
    if (core_.state != StateKind::AwaitPreTest && core_.state != StateKind::AwaitPostTest)
      throw wrong_state("submit_answers");
    Core next = core_;
    SubmitOutcome out;
    out.graded = grade_test(*kb_, *next.plan, answers);
    for (const auto& qid : next.plan->question_ids) next.model.asked_questions.insert(qid);
    const auto& cid = next.concept_id;

    if (next.state == StateKind::AwaitPreTest) {
      auto [gate, trace] = gate_pretest(out.graded.score, config_.gate,
                                        prerequisite_status(*kb_, next.model, cid));
      out.gate = gate;
      out.trace = trace;
      switch (gate.kind) {
        case GateDecision::Kind::Skip:
          next.model = update_after_posttest(std::move(next.model), *kb_, cid, out.graded.score,
                                             clock_(), "pre_test_skip");
          if (next.forced == cid) next.forced.reset();
          out.next = StateKind::SelectingConcept;
          break;
        case GateDecision::Kind::Train: {
          auto [method, ptrace] = present(next.model, cid);
          next.method = method;
          out.method = method;
          out.trace.insert(out.trace.end(), ptrace.begin(), ptrace.end());
          out.next = StateKind::Presenting;
          break;
        }
        case GateDecision::Kind::Remediate:
          next.forced = gate.prerequisite;
          out.next = StateKind::SelectingConcept;
          break;
      }
    } else {
      next.model = update_after_posttest(std::move(next.model), *kb_, cid, out.graded.score, clock_());
      const bool mastered = out.graded.level >= kMasteryBar;
      out.mastered = mastered;
      if (mastered) {
        if (next.forced == cid) next.forced.reset();
        out.trace.push_back({"MASTERY.reached", "post-test score " + std::to_string(out.graded.score) +
                                                    " reaches the mastery bar"});
      } else {
        next.forced = cid;
        out.trace.push_back({"MASTERY.retrain",
                             "post-test score " + std::to_string(out.graded.score) +
                                 " is below the mastery bar: the concept is retrained with the next "
                                 "method and fresh questions"});
      }
      out.next = StateKind::SelectingConcept;
    }
    next.plan.reset();
    if (out.next != StateKind::Presenting) next.method.reset();
    enter(next, out.next, out.trace, &out.graded);
    commit(std::move(next));
    return out;
  }

  // Number of post-test attempts so far; drives method rotation on retraining.
  static int training_attempt(const LearnerModel& model, const std::string& concept_id) {
    auto it = model.concept_knowledge.find(concept_id);
    return it == model.concept_knowledge.end() ? 0 : it->second.attempts;
  }

 private:
  struct Core {
    StateKind state = StateKind::AwaitQuestionnaire;
    LearnerModel model;
    std::string concept_id;
    std::optional<TestPlan> plan;
    std::optional<EducationMethod> method;
    std::optional<std::string> forced;
  };

  Error wrong_state(const char* op) const {
    return Error(ErrorCode::WrongState,
                 std::string(op) + " is not allowed in state " + std::string(to_string(core_.state)));
  }

  std::pair<EducationMethod, RuleTrace> present(const LearnerModel& m, const std::string& cid) const {
    const auto& c = kb_->concept_at(cid);
    if (config_.fixed_presentation && c.assets.contains(*config_.fixed_presentation))
      return {*config_.fixed_presentation,
              {{"PRES.fixed", "non-adaptive policy presents every concept by " +
                                  std::string(to_string(*config_.fixed_presentation))}}};
    return choose_presentation(m.style->dominant, training_attempt(m, cid), config_.preferences, c);
  }

  std::pair<TestPlan, RuleTrace> plan_for(Core& c, TestPhase phase) const {
    const auto seed = mix_seed(c.model.seed, c.model.plans_issued);
    auto result = plan_test(*kb_, c.model, c.concept_id, phase, config_.level_mix, seed);
    ++c.model.plans_issued;
    return result;
  }

  void enter(Core& c, StateKind to, const RuleTrace& trace, const GradedTest* graded) {
    c.state = to;
    json detail{{"traces", to_json(trace)}};
    if (graded) detail["graded"] = to_json(*graded);
    if (c.plan && (to == StateKind::AwaitPreTest || to == StateKind::AwaitPostTest))
      detail["plan"] = c.plan->question_ids;
    if (to == StateKind::Presenting && c.method) detail["method"] = to_string(*c.method);
    std::optional<int> score;
    if (graded) score = graded->score;
    c.model.events.push_back({clock_(), "enter:" + std::string(to_string(to)),
                              to == StateKind::Completed ? std::string{} : c.concept_id, score,
                              std::move(detail)});
  }

  void commit(Core next) {
    if (persist_) persist_(next.model);
    core_ = std::move(next);
  }

  std::shared_ptr<const KnowledgeBase> kb_;
  PedagogyConfig config_;
  Questionnaire questionnaire_;
  Clock clock_;
  Persist persist_;
  Core core_;
  std::size_t transcript_start_ = 0;
};

}  // namespace simtutor
