#pragma once

// Population simulator. Synthetic learners are driven through the real
// session engine under either the adaptive policy or a static baseline
// (Text-only presentation, one fixed question mix for every learner level).
//
// Response model: a learner answers question q correctly with probability
//   pre-test, concept never presented:  ability[d] * prior_knowledge
//   otherwise:                          ability[d] + bonus   (bonus only when the
//                                       last presentation used the preferred method)
// clamped to [0, 1]. The uniform draw for (learner, concept, test ordinal,
// position) is fixed by the seed, so both policies see the same population and
// the same luck even when they pick different questions.
//
// Figures produced here are harness-derived, not published results.

#include <simtutor/errors.hpp>
#include <simtutor/kb.hpp>
#include <simtutor/learner.hpp>
#include <simtutor/pedagogy.hpp>
#include <simtutor/random.hpp>
#include <simtutor/session.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <mutex>
#include <set>
#include <span>
#include <thread>
#include <vector>

namespace simtutor {

enum class Policy { Adaptive, Static };

constexpr std::string_view to_string(Policy p) { return p == Policy::Adaptive ? "adaptive" : "static"; }

inline std::optional<Policy> parse_policy(std::string_view s) {
  if (s == "adaptive") return Policy::Adaptive;
  if (s == "static") return Policy::Static;
  return std::nullopt;
}

struct SimLearnerProfile {
  LearningStyle true_style = LearningStyle::SS;
  std::array<double, 3> ability{0.5, 0.5, 0.5};  // by Difficulty
  double prior_knowledge = 0.5;
  double method_match_bonus = 0.0;
};

struct PopulationConfig {
  double ability_min = 0.15;
  double ability_max = 0.75;
  std::array<double, 3> difficulty_offset{0.05, 0.0, -0.05};
  double prior_min = 0.2;
  double prior_max = 0.6;
  // Probability that an item aimed at the learner's own style is answered 5.
  double questionnaire_fidelity = 0.9;
  // When set, every learner gets this ability/prior (style is still drawn).
  std::optional<std::array<double, 3>> fixed_ability;
  std::optional<double> fixed_prior;
};

struct SimConfig {
  PedagogyConfig pedagogy;
  PopulationConfig population;
  double method_match_bonus = 0.2;
  int step_cap = 200;
  // Static baseline mix. Unset: the row a learner without history starts on,
  // held fixed for every level.
  std::optional<DifficultyCounts> static_mix;
  unsigned threads = 0;  // 0: hardware concurrency
  bool audit = true;
};

inline SimConfig sim_config_from_json(const json& j) {
  SimConfig cfg;
  try {
    if (j.contains("pedagogy")) cfg.pedagogy = pedagogy_config_from_json(j.at("pedagogy"));
    cfg.method_match_bonus = j.value("method_match_bonus", cfg.method_match_bonus);
    cfg.step_cap = j.value("step_cap", cfg.step_cap);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.audit = j.value("audit", cfg.audit);
    if (j.contains("static_mix")) {
      const auto& m = j.at("static_mix");
      DifficultyCounts counts{};
      for (auto d : kAllDifficulties) counts[index_of(d)] = m.at(std::string(to_string(d))).get<int>();
      cfg.static_mix = counts;
    }
    if (j.contains("population")) {
      const auto& p = j.at("population");
      auto& pop = cfg.population;
      pop.ability_min = p.value("ability_min", pop.ability_min);
      pop.ability_max = p.value("ability_max", pop.ability_max);
      pop.prior_min = p.value("prior_min", pop.prior_min);
      pop.prior_max = p.value("prior_max", pop.prior_max);
      pop.questionnaire_fidelity = p.value("questionnaire_fidelity", pop.questionnaire_fidelity);
      if (p.contains("difficulty_offset"))
        for (auto d : kAllDifficulties)
          pop.difficulty_offset[index_of(d)] = p.at("difficulty_offset").at(std::string(to_string(d))).get<double>();
      if (p.contains("fixed_ability")) {
        std::array<double, 3> a{};
        for (auto d : kAllDifficulties)
          a[index_of(d)] = p.at("fixed_ability").at(std::string(to_string(d))).get<double>();
        pop.fixed_ability = a;
      }
      if (p.contains("fixed_prior")) pop.fixed_prior = p.at("fixed_prior").get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed simulator config: ") + e.what());
  } catch (const ValidationError& e) {
    throw Error(ErrorCode::Config, std::string("invalid pedagogy section: ") + e.what());
  }
  const auto& pop = cfg.population;
  auto prob = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!prob(pop.ability_min) || !prob(pop.ability_max) || pop.ability_min > pop.ability_max ||
      !prob(pop.prior_min) || !prob(pop.prior_max) || pop.prior_min > pop.prior_max ||
      !prob(pop.questionnaire_fidelity))
    throw Error(ErrorCode::Config, "population probabilities must lie in [0,1] with min <= max");
  if (cfg.method_match_bonus < -1.0 || cfg.method_match_bonus > 1.0)
    throw Error(ErrorCode::Config, "method_match_bonus must lie in [-1,1]");
  if (cfg.step_cap < 1) throw Error(ErrorCode::Config, "step_cap must be >= 1");
  if (cfg.static_mix)
    for (int c : *cfg.static_mix)
      if (c < 1) throw Error(ErrorCode::Config, "static_mix needs >= 1 question per difficulty");
  return cfg;
}

inline SimConfig load_sim_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open simulator config " + path.string());
  try {
    return sim_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("malformed simulator config: ") + e.what());
  }
}

inline DifficultyCounts static_mix_row(const SimConfig& cfg) {
  if (cfg.static_mix) return *cfg.static_mix;
  const auto start = derive_learner_level(LearnerModel{});
  auto it = cfg.pedagogy.level_mix.rows.find(start);
  if (it == cfg.pedagogy.level_mix.rows.end())
    throw Error(ErrorCode::Config, "no mix row for the starting learner level");
  return it->second;
}

// Pedagogy as seen by the engine under each policy.
inline PedagogyConfig policy_pedagogy(const SimConfig& cfg, Policy policy) {
  PedagogyConfig p = cfg.pedagogy;
  if (policy == Policy::Static) {
    p.fixed_presentation = EducationMethod::Text;
    const auto row = static_mix_row(cfg);
    for (auto l : kAllLearnerLevels) p.level_mix.rows[l] = row;
  }
  return p;
}

// Three generic items per style; the simulator only needs the scoring shape.
inline Questionnaire synthetic_questionnaire() {
  Questionnaire q;
  for (auto s : kAllStyles)
    for (int i = 1; i <= 3; ++i)
      q.items.push_back({std::string(to_string(s)) + "-" + std::to_string(i),
                         "synthetic item " + std::to_string(i) + " for " + std::string(to_string(s)),
                         s});
  return q;
}

inline SimLearnerProfile generate_profile(const SimConfig& cfg, std::uint64_t seed, std::size_t index) {
  Rng rng(mix_seed(mix_seed(seed, index), 1));
  const auto& pop = cfg.population;
  SimLearnerProfile p;
  p.true_style = kAllStyles[rng.index(kAllStyles.size())];
  const double base = pop.ability_min + (pop.ability_max - pop.ability_min) * rng.uniform();
  const double prior = pop.prior_min + (pop.prior_max - pop.prior_min) * rng.uniform();
  for (auto d : kAllDifficulties)
    p.ability[index_of(d)] = std::clamp(base + pop.difficulty_offset[index_of(d)], 0.0, 1.0);
  p.prior_knowledge = prior;
  if (pop.fixed_ability) p.ability = *pop.fixed_ability;
  if (pop.fixed_prior) p.prior_knowledge = *pop.fixed_prior;
  p.method_match_bonus = cfg.method_match_bonus;
  return p;
}

struct LearnerOutcome {
  int concepts_mastered = 0;
  int tests_taken = 0;
  bool completed = false;
  bool capped = false;
  bool insufficient_bank = false;
  int audit_violations = 0;
  std::map<std::string, int> final_levels;  // level name (or "not_attempted") -> count
};

namespace detail {

// Independent re-check of the selection rules over a finished transcript.
inline int audit_events(const KnowledgeBase& kb, std::span<const LearningEvent> events) {
  int violations = 0;
  std::set<std::string> seen;
  for (const auto& e : events) {
    if (!e.detail.contains("plan")) continue;
    const auto& c = kb.concept_at(e.concept_id);
    std::set<std::string> sections;
    std::set<Difficulty> levels;
    for (const auto& qid : e.detail.at("plan")) {
      const auto& q = kb.question_at(qid.get<std::string>());
      if (!seen.insert(q.id).second) ++violations;
      sections.insert(q.section_id);
      levels.insert(q.difficulty);
    }
    if (sections.size() != c.sections.size()) ++violations;
    if (levels.size() != kAllDifficulties.size()) ++violations;
  }
  return violations;
}

}  // namespace detail

inline LearnerOutcome simulate_learner(std::shared_ptr<const KnowledgeBase> kb, const SimConfig& cfg,
                                       Policy policy, std::uint64_t seed, std::size_t index) {
  const auto profile = generate_profile(cfg, seed, index);
  const auto preferred = cfg.pedagogy.preferences.rows.at(profile.true_style)[0];
  const auto learner_seed = mix_seed(seed, index);

  LearnerModel model;
  model.learner_id = "sim-" + std::to_string(index);
  model.display_name = model.learner_id;
  model.seed = mix_seed(learner_seed, 2);

  std::int64_t tick = 0;
  Session session(kb, policy_pedagogy(cfg, policy), synthetic_questionnaire(), std::move(model),
                  [&tick] { return tick++; });

  Rng questionnaire_rng(mix_seed(learner_seed, 3));
  std::map<std::string, EducationMethod> last_method;
  std::map<std::string, int> tests_on;  // tests taken per concept
  LearnerOutcome out;

  auto probability = [&](const Question& q, TestPhase phase) {
    const double a = profile.ability[index_of(q.difficulty)];
    auto it = last_method.find(q.concept_id);
    if (it == last_method.end()) {
      return phase == TestPhase::PreTest ? std::clamp(a * profile.prior_knowledge, 0.0, 1.0) : a;
    }
    const double bonus = it->second == preferred ? profile.method_match_bonus : 0.0;
    return std::clamp(a + bonus, 0.0, 1.0);
  };

  int steps = 0;
  bool stop = false;
  while (!stop && steps < cfg.step_cap) {
    try {
      switch (session.state()) {
        case StateKind::AwaitQuestionnaire: {
          std::map<std::string, int> responses;
          for (const auto& item : session.questionnaire().items) {
            if (item.target_style == profile.true_style)
              responses[item.id] = questionnaire_rng.uniform() < cfg.population.questionnaire_fidelity
                                       ? 5
                                       : 1 + static_cast<int>(questionnaire_rng.index(5));
            else
              responses[item.id] = 1 + static_cast<int>(questionnaire_rng.index(3));
          }
          session.submit_questionnaire(responses);
          break;
        }
        case StateKind::SelectingConcept:
          session.advance();
          break;
        case StateKind::Presenting:
          last_method[session.concept_id()] = *session.method();
          session.advance();
          break;
        case StateKind::AwaitPreTest:
        case StateKind::AwaitPostTest: {
          const auto& plan = *session.plan();
          const auto ordinal = static_cast<std::uint64_t>(tests_on[plan.concept_id]++);
          const auto test_key = mix_seed(mix_seed(learner_seed, hash_string(plan.concept_id)), ordinal);
          std::map<std::string, int> answers;
          for (std::size_t pos = 0; pos < plan.question_ids.size(); ++pos) {
            const auto& qid = plan.question_ids[pos];
            const auto& q = kb->question_at(qid);
            const double u = static_cast<double>(splitmix64(mix_seed(test_key, pos)) >> 11) * 0x1.0p-53;
            const int n = static_cast<int>(q.choices.size());
            answers[qid] = u < probability(q, plan.phase) ? q.correct_index : (q.correct_index + 1) % n;
          }
          session.submit_answers(answers);
          ++out.tests_taken;
          break;
        }
        case StateKind::Completed:
          out.completed = true;
          stop = true;
          continue;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientBank) throw;
      out.insufficient_bank = true;
      break;
    }
    ++steps;
  }
  if (session.state() == StateKind::Completed) out.completed = true;
  out.capped = !out.completed && !out.insufficient_bank;

  const auto& m = session.model();
  for (const auto& [cid, c] : kb->concepts()) {
    auto it = m.concept_knowledge.find(cid);
    if (it == m.concept_knowledge.end()) {
      ++out.final_levels["not_attempted"];
      continue;
    }
    ++out.final_levels[std::string(to_string(it->second.level))];
    if (it->second.level >= kMasteryBar) ++out.concepts_mastered;
  }
  if (cfg.audit) out.audit_violations = detail::audit_events(*kb, session.transcript());
  return out;
}

struct SimReport {
  Policy policy = Policy::Adaptive;
  std::size_t learners = 0;
  std::uint64_t seed = 0;
  double method_match_bonus = 0.0;
  int concepts_total = 0;
  double mean_concepts_mastered = 0.0;
  double mastery_rate = 0.0;                     // mean fraction of concepts mastered
  std::optional<double> tests_per_mastered;      // total tests / total mastered
  std::map<std::string, int> final_levels;
  int completed = 0;
  int capped = 0;
  int insufficient_bank = 0;
  int audit_violations = 0;
  double runtime_seconds = 0.0;
  std::vector<LearnerOutcome> outcomes;  // by learner index
};

inline std::vector<LearnerOutcome> run_population(std::shared_ptr<const KnowledgeBase> kb,
                                                  const SimConfig& cfg, Policy policy,
                                                  std::uint64_t seed, std::size_t n) {
  std::vector<LearnerOutcome> outcomes(n);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        outcomes[i] = simulate_learner(kb, cfg, policy, seed, i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

inline SimReport summarize(const KnowledgeBase& kb, Policy policy, std::uint64_t seed, double bonus,
                           std::vector<LearnerOutcome> outcomes) {
  SimReport r;
  r.policy = policy;
  r.learners = outcomes.size();
  r.seed = seed;
  r.method_match_bonus = bonus;
  r.concepts_total = static_cast<int>(kb.concepts().size());
  long long mastered = 0, tests = 0;
  for (const auto& o : outcomes) {
    mastered += o.concepts_mastered;
    tests += o.tests_taken;
    r.completed += o.completed;
    r.capped += o.capped;
    r.insufficient_bank += o.insufficient_bank;
    r.audit_violations += o.audit_violations;
    for (const auto& [k, v] : o.final_levels) r.final_levels[k] += v;
  }
  if (!outcomes.empty()) {
    r.mean_concepts_mastered = static_cast<double>(mastered) / static_cast<double>(outcomes.size());
    r.mastery_rate = r.concepts_total ? r.mean_concepts_mastered / r.concepts_total : 0.0;
  }
  if (mastered > 0) r.tests_per_mastered = static_cast<double>(tests) / static_cast<double>(mastered);
  r.outcomes = std::move(outcomes);
  return r;
}

inline SimReport simulate_population(std::shared_ptr<const KnowledgeBase> kb, std::size_t n,
                                     std::uint64_t seed, Policy policy, const SimConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  auto report = summarize(*kb, policy, seed, cfg.method_match_bonus,
                          run_population(kb, cfg, policy, seed, n));
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  report.runtime_seconds = std::max(elapsed.count(), 1e-9);
  return report;
}

// Wall-clock runtime is the only non-deterministic field; leave it out to
// compare reports byte for byte.
inline json to_json(const SimReport& r, bool include_runtime = true) {
  json levels = json::object();
  for (const auto& [k, v] : r.final_levels) levels[k] = v;
  json j{{"policy", to_string(r.policy)},
         {"learners", r.learners},
         {"seed", r.seed},
         {"method_match_bonus", r.method_match_bonus},
         {"concepts_total", r.concepts_total},
         {"mean_concepts_mastered", r.mean_concepts_mastered},
         {"mastery_rate", r.mastery_rate},
         {"mean_tests_per_mastered_concept",
          r.tests_per_mastered ? json(*r.tests_per_mastered) : json(nullptr)},
         {"final_levels", levels},
         {"completed", r.completed},
         {"capped", r.capped},
         {"insufficient_bank", r.insufficient_bank},
         {"audit_violations", r.audit_violations},
         {"note", "harness-derived figures from a synthetic response model"}};
  if (include_runtime) j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

struct PolicyComparison {
  SimReport adaptive;
  SimReport static_baseline;
  bool no_bonus_control = false;
  double mastery_rate_delta_points = 0.0;  // adaptive - static, paired mean, percentage points
  std::optional<double> tests_per_mastery_delta;
};

inline PolicyComparison compare_policies(std::shared_ptr<const KnowledgeBase> kb, std::size_t n,
                                         std::uint64_t seed, const SimConfig& cfg) {
  PolicyComparison c;
  c.adaptive = simulate_population(kb, n, seed, Policy::Adaptive, cfg);
  c.static_baseline = simulate_population(kb, n, seed, Policy::Static, cfg);
  c.no_bonus_control = cfg.method_match_bonus == 0.0;
  const double total = static_cast<double>(kb->concepts().size());
  if (n > 0 && total > 0) {
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i)
      sum += (c.adaptive.outcomes[i].concepts_mastered - c.static_baseline.outcomes[i].concepts_mastered) /
             total;
    c.mastery_rate_delta_points = 100.0 * sum / static_cast<double>(n);
  }
  if (c.adaptive.tests_per_mastered && c.static_baseline.tests_per_mastered)
    c.tests_per_mastery_delta = *c.adaptive.tests_per_mastered - *c.static_baseline.tests_per_mastered;
  else if (n == 0)
    c.tests_per_mastery_delta = 0.0;
  return c;
}

inline json to_json(const PolicyComparison& c, bool include_runtime = true) {
  return {{"adaptive", to_json(c.adaptive, include_runtime)},
          {"static", to_json(c.static_baseline, include_runtime)},
          {"no_bonus_control", c.no_bonus_control},
          {"paired_delta",
           {{"mastery_rate_points", c.mastery_rate_delta_points},
            {"tests_per_mastered_concept",
             c.tests_per_mastery_delta ? json(*c.tests_per_mastery_delta) : json(nullptr)}}}};
}

}  // namespace simtutor
