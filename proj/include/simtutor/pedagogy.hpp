#pragma once

// The expert-system layer. Each decision is an ordered, priority-tagged
// procedure that records the rules it fired in a RuleTrace.
//
// Test selection rules:
//   R1  no question is ever asked twice to the same learner
//   R2  every section of the concept is covered
//   R3  every difficulty level is present

#include <simtutor/errors.hpp>
#include <simtutor/kb.hpp>
#include <simtutor/learner.hpp>
#include <simtutor/random.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace simtutor {

struct RuleFiring {
  std::string rule;
  std::string justification;

  friend bool operator==(const RuleFiring&, const RuleFiring&) = default;
};

using RuleTrace = std::vector<RuleFiring>;

inline json to_json(const RuleTrace& trace) {
  json out = json::array();
  for (const auto& f : trace) out.push_back({{"rule", f.rule}, {"justification", f.justification}});
  return out;
}

enum class TestPhase { PreTest, PostTest };

constexpr std::string_view to_string(TestPhase p) {
  return p == TestPhase::PreTest ? "pre_test" : "post_test";
}

struct TestPlan {
  TestPhase phase = TestPhase::PreTest;
  std::string concept_id;
  std::vector<std::string> question_ids;
  std::vector<int> weights;  // parallel to question_ids
  int total_weight = 0;

  friend bool operator==(const TestPlan&, const TestPlan&) = default;
};

using DifficultyCounts = std::array<int, 3>;

struct LevelMix {
  std::map<LearnerLevel, DifficultyCounts> rows;

  friend bool operator==(const LevelMix&, const LevelMix&) = default;
};

struct PreferenceTable {
  std::map<LearningStyle, std::array<EducationMethod, 5>> rows;

  friend bool operator==(const PreferenceTable&, const PreferenceTable&) = default;
};

struct GateThresholds {
  int skip = 86;
  int train = 51;

  friend bool operator==(const GateThresholds&, const GateThresholds&) = default;
};

// Lowest knowledge level at which a concept counts as learned.
inline constexpr KnowledgeLevel kMasteryBar = KnowledgeLevel::Good;

inline LevelMix default_level_mix() {
  return {{{LearnerLevel::Weak, {3, 1, 1}},
           {LearnerLevel::SlowLearner, {3, 1, 1}},
           {LearnerLevel::Smart, {1, 3, 1}},
           {LearnerLevel::Genius, {1, 1, 3}}}};
}

inline PreferenceTable default_preferences() {
  using M = EducationMethod;
  return {{{LearningStyle::SS, {M::Game, M::DynamicView, M::Puzzle, M::Film, M::Text}},
           {LearningStyle::GOA, {M::Puzzle, M::Text, M::Film, M::DynamicView, M::Game}},
           {LearningStyle::EIA, {M::Puzzle, M::Text, M::DynamicView, M::Film, M::Game}},
           {LearningStyle::CA, {M::Text, M::Film, M::DynamicView, M::Puzzle, M::Game}},
           {LearningStyle::DLA, {M::DynamicView, M::Film, M::Game, M::Puzzle, M::Text}}}};
}

struct PedagogyConfig {
  GateThresholds gate;
  PreferenceTable preferences = default_preferences();
  LevelMix level_mix = default_level_mix();
  // Non-adaptive baseline: present every concept this way regardless of style.
  std::optional<EducationMethod> fixed_presentation;

  friend bool operator==(const PedagogyConfig&, const PedagogyConfig&) = default;
};

inline void validate(const PedagogyConfig& cfg) {
  std::vector<Violation> v;
  if (cfg.gate.train < 0 || cfg.gate.skip > 100 || cfg.gate.skip <= cfg.gate.train)
    v.push_back({"$.gate", "thresholds must satisfy 0 <= train < skip <= 100"});
  for (auto s : kAllStyles) {
    auto it = cfg.preferences.rows.find(s);
    const auto path = "$.preferences." + std::string(to_string(s));
    if (it == cfg.preferences.rows.end()) {
      v.push_back({path, "missing preference row"});
      continue;
    }
    std::set<EducationMethod> seen(it->second.begin(), it->second.end());
    if (seen.size() != kAllMethods.size())
      v.push_back({path, "row must be a permutation of the five methods"});
  }
  for (auto l : kAllLearnerLevels) {
    auto it = cfg.level_mix.rows.find(l);
    const auto path = "$.level_mix." + std::string(to_string(l));
    if (it == cfg.level_mix.rows.end()) {
      v.push_back({path, "missing mix row"});
      continue;
    }
    for (auto d : kAllDifficulties)
      if (it->second[index_of(d)] < 1)
        v.push_back({path + "." + std::string(to_string(d)), "each difficulty needs >= 1"});
  }
  if (!v.empty()) throw ValidationError(std::move(v));
}

inline json to_json(const PedagogyConfig& cfg) {
  json prefs = json::object();
  for (const auto& [s, row] : cfg.preferences.rows) {
    json r = json::array();
    for (auto m : row) r.push_back(to_string(m));
    prefs[std::string(to_string(s))] = r;
  }
  json mix = json::object();
  for (const auto& [l, row] : cfg.level_mix.rows) {
    json r = json::object();
    for (auto d : kAllDifficulties) r[std::string(to_string(d))] = row[index_of(d)];
    mix[std::string(to_string(l))] = r;
  }
  json out{{"gate", {{"skip", cfg.gate.skip}, {"train", cfg.gate.train}}},
           {"preferences", prefs},
           {"level_mix", mix}};
  if (cfg.fixed_presentation) out["fixed_presentation"] = to_string(*cfg.fixed_presentation);
  return out;
}

inline PedagogyConfig pedagogy_config_from_json(const json& j) {
  PedagogyConfig cfg;
  cfg.preferences.rows.clear();
  cfg.level_mix.rows.clear();
  std::vector<Violation> v;
  try {
    cfg.gate.skip = j.at("gate").at("skip").get<int>();
    cfg.gate.train = j.at("gate").at("train").get<int>();
    for (const auto& [k, row] : j.at("preferences").items()) {
      auto s = parse_style(k);
      if (!s || !row.is_array() || row.size() != kAllMethods.size()) {
        v.push_back({"$.preferences." + k, "expected a style key with five methods"});
        continue;
      }
      std::array<EducationMethod, 5> methods{};
      for (std::size_t i = 0; i < methods.size(); ++i) {
        auto m = parse_method(row[i].get<std::string>());
        if (!m) v.push_back({"$.preferences." + k + "[" + std::to_string(i) + "]", "unknown method"});
        else methods[i] = *m;
      }
      cfg.preferences.rows[*s] = methods;
    }
    for (const auto& [k, row] : j.at("level_mix").items()) {
      auto l = parse_learner_level(k);
      if (!l) {
        v.push_back({"$.level_mix." + k, "unknown learner level"});
        continue;
      }
      DifficultyCounts counts{};
      for (auto d : kAllDifficulties) counts[index_of(d)] = row.at(std::string(to_string(d))).get<int>();
      cfg.level_mix.rows[*l] = counts;
    }
    if (j.contains("fixed_presentation")) {
      auto m = parse_method(j.at("fixed_presentation").get<std::string>());
      if (!m) v.push_back({"$.fixed_presentation", "unknown method"});
      else cfg.fixed_presentation = *m;
    }
  } catch (const json::exception& e) {
    v.push_back({"$", std::string("malformed pedagogy config: ") + e.what()});
  }
  if (!v.empty()) throw ValidationError(std::move(v));
  validate(cfg);
  return cfg;
}

inline PedagogyConfig load_pedagogy_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open pedagogy config " + path.string());
  try {
    return pedagogy_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("malformed pedagogy config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Test planning

namespace detail {

inline std::string counts_text(const DifficultyCounts& c) {
  return "easy=" + std::to_string(c[0]) + " medium=" + std::to_string(c[1]) +
         " hard=" + std::to_string(c[2]);
}

}  // namespace detail

inline std::pair<TestPlan, RuleTrace> plan_test(const KnowledgeBase& kb, const LearnerModel& model,
                                                const std::string& concept_id, TestPhase phase,
                                                const LevelMix& mix, std::uint64_t seed) {
  const Concept& con = kb.concept_at(concept_id);
  auto row_it = mix.rows.find(model.level);
  if (row_it == mix.rows.end())
    throw Error(ErrorCode::Config,
                "no question mix for learner level '" + std::string(to_string(model.level)) + "'");
  const DifficultyCounts wanted = row_it->second;

  RuleTrace trace;
  trace.push_back({"MIX.level", "learner level " + std::string(to_string(model.level)) +
                                    " draws " + detail::counts_text(wanted)});

  // cells[section][difficulty] -> eligible ids, in id order
  const std::size_t n_sections = con.sections.size();
  std::vector<std::array<std::vector<std::string>, 3>> cells(n_sections);
  std::map<std::string, std::size_t> section_index;
  for (std::size_t i = 0; i < n_sections; ++i) section_index[con.sections[i].id] = i;
  DifficultyCounts available{};
  int excluded = 0;
  for (const auto& qid : kb.questions_of(concept_id)) {
    if (model.asked_questions.contains(qid)) {
      ++excluded;
      continue;
    }
    const Question& q = kb.question_at(qid);
    cells[section_index.at(q.section_id)][index_of(q.difficulty)].push_back(qid);
    ++available[index_of(q.difficulty)];
  }
  trace.push_back({"R1.no-repeat", std::to_string(excluded) +
                                       " previously asked question(s) excluded from the bank"});

  for (std::size_t s = 0; s < n_sections; ++s) {
    bool any = false;
    for (const auto& cell : cells[s]) any = any || !cell.empty();
    if (!any)
      throw Error(ErrorCode::InsufficientBank,
                  "section '" + con.sections[s].id + "' of concept '" + concept_id +
                      "' has no unused questions",
                  concept_id);
  }
  for (auto d : kAllDifficulties)
    if (available[index_of(d)] < wanted[index_of(d)])
      throw Error(ErrorCode::InsufficientBank,
                  "concept '" + concept_id + "' has " + std::to_string(available[index_of(d)]) +
                      " unused " + std::string(to_string(d)) + " question(s), plan needs " +
                      std::to_string(wanted[index_of(d)]),
                  concept_id);

  Rng rng(seed);
  std::set<std::string> chosen;
  std::vector<std::string> picked;
  DifficultyCounts remaining = wanted;
  DifficultyCounts drawn{};
  int raised = 0;

  auto unchosen = [&](const std::vector<std::string>& pool) {
    std::vector<std::string> out;
    for (const auto& id : pool)
      if (!chosen.contains(id)) out.push_back(id);
    return out;
  };
  auto take = [&](const std::string& id) {
    chosen.insert(id);
    picked.push_back(id);
    ++drawn[index_of(kb.question_at(id).difficulty)];
  };

  // Sections are matched to the mix's difficulty slots (maximum bipartite
  // matching), so the plan is raised only for sections no slot can serve.
  std::vector<Difficulty> slots;
  for (auto d : kAllDifficulties)
    for (int k = 0; k < wanted[index_of(d)]; ++k) slots.push_back(d);
  rng.shuffle(slots);
  std::vector<std::size_t> section_order(n_sections);
  for (std::size_t i = 0; i < n_sections; ++i) section_order[i] = i;
  rng.shuffle(section_order);

  constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> slot_owner(slots.size(), kFree);
  std::vector<std::size_t> section_slot(n_sections, kFree);
  std::vector<bool> visited;
  auto augment = [&](auto&& self, std::size_t s) -> bool {
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (visited[k] || cells[s][index_of(slots[k])].empty()) continue;
      visited[k] = true;
      if (slot_owner[k] == kFree || self(self, slot_owner[k])) {
        slot_owner[k] = s;
        section_slot[s] = k;
        return true;
      }
    }
    return false;
  };
  for (auto s : section_order) {
    visited.assign(slots.size(), false);
    augment(augment, s);
  }

  for (auto s : section_order) {
    if (section_slot[s] != kFree) {
      const auto d = slots[section_slot[s]];
      const auto& pool = cells[s][index_of(d)];
      take(pool[rng.index(pool.size())]);
      --remaining[index_of(d)];
    } else {
      std::vector<std::string> pool;
      for (const auto& cell : cells[s])
        for (const auto& id : cell) pool.push_back(id);
      take(pool[rng.index(pool.size())]);
      ++raised;
    }
  }
  trace.push_back({"R2.section-coverage",
                   "each of " + std::to_string(n_sections) + " section(s) contributes a question" +
                       (raised ? "; " + std::to_string(raised) + " extra question(s) added" : "")});

  for (auto d : kAllDifficulties) {
    while (remaining[index_of(d)] > 0) {
      std::vector<std::string> pool;
      for (std::size_t s = 0; s < n_sections; ++s)
        for (const auto& id : unchosen(cells[s][index_of(d)])) pool.push_back(id);
      take(pool[rng.index(pool.size())]);
      --remaining[index_of(d)];
    }
  }
  trace.push_back({"R3.all-levels", "drawn " + detail::counts_text(drawn)});

  rng.shuffle(picked);
  TestPlan plan;
  plan.phase = phase;
  plan.concept_id = concept_id;
  for (const auto& id : picked) {
    plan.question_ids.push_back(id);
    plan.weights.push_back(kb.question_at(id).weight);
    plan.total_weight += plan.weights.back();
  }
  trace.push_back({"SEQ.order", std::string(to_string(phase)) + " of " +
                                    std::to_string(plan.question_ids.size()) +
                                    " question(s) in seeded random order"});
  return {std::move(plan), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Gate, presentation and sequencing

struct GateDecision {
  enum class Kind { Skip, Train, Remediate };
  Kind kind = Kind::Train;
  std::string prerequisite;  // set only for Remediate

  friend bool operator==(const GateDecision&, const GateDecision&) = default;
};

constexpr std::string_view to_string(GateDecision::Kind k) {
  switch (k) {
    case GateDecision::Kind::Skip: return "skip";
    case GateDecision::Kind::Train: return "train";
    case GateDecision::Kind::Remediate: return "remediate";
  }
  return "train";
}

struct PrerequisiteStatus {
  std::string concept_id;
  bool mastered = false;
};

inline std::pair<GateDecision, RuleTrace> gate_pretest(
    int score, const GateThresholds& thresholds, const std::vector<PrerequisiteStatus>& prerequisites) {
  if (thresholds.skip <= thresholds.train)
    throw Error(ErrorCode::Config, "gate thresholds need skip > train");
  if (score < 0 || score > 100)
    throw Error(ErrorCode::OutOfRange, "score " + std::to_string(score) + " outside 0..100");
  const auto s = std::to_string(score);
  if (score >= thresholds.skip)
    return {{GateDecision::Kind::Skip, {}},
            {{"GATE.skip", "pre-test score " + s + " >= " + std::to_string(thresholds.skip) +
                               ": concept already known"}}};
  if (score >= thresholds.train)
    return {{GateDecision::Kind::Train, {}},
            {{"GATE.train", "pre-test score " + s + " >= " + std::to_string(thresholds.train) +
                                ": ready to learn the concept"}}};
  for (const auto& p : prerequisites)
    if (!p.mastered)
      return {{GateDecision::Kind::Remediate, p.concept_id},
              {{"GATE.remediate", "pre-test score " + s + " < " +
                                      std::to_string(thresholds.train) + " and prerequisite '" +
                                      p.concept_id + "' is not mastered"}}};
  return {{GateDecision::Kind::Train, {}},
          {{"GATE.train", "pre-test score " + s + " < " + std::to_string(thresholds.train) +
                              " but every prerequisite is mastered: train directly"}}};
}

inline std::pair<EducationMethod, RuleTrace> choose_presentation(LearningStyle style, int attempt,
                                                                 const PreferenceTable& prefs,
                                                                 const Concept& con) {
  if (con.assets.empty())
    throw Error(ErrorCode::NoAsset, "concept '" + con.id + "' has no assets", con.id);
  auto row_it = prefs.rows.find(style);
  if (row_it == prefs.rows.end())
    throw Error(ErrorCode::Config, "no preference row for style " + std::string(to_string(style)));
  const auto& row = row_it->second;
  const std::size_t start = static_cast<std::size_t>(attempt < 0 ? 0 : attempt) % row.size();
  for (std::size_t k = 0; k < row.size(); ++k) {
    auto m = row[(start + k) % row.size()];
    if (!con.assets.contains(m)) continue;
    RuleTrace trace{{"PRES.style", "style " + std::string(to_string(style)) + ", training attempt " +
                                       std::to_string(attempt) + " starts at preference #" +
                                       std::to_string(start + 1)}};
    if (k == 0)
      trace.push_back({"PRES.preferred", "presenting by " + std::string(to_string(m))});
    else
      trace.push_back({"PRES.fallback", "no asset for " + std::to_string(k) +
                                            " preferred method(s); presenting by " +
                                            std::string(to_string(m))});
    return {m, std::move(trace)};
  }
  throw Error(ErrorCode::NoAsset, "concept '" + con.id + "' has no usable asset", con.id);
}

inline bool is_mastered(const LearnerModel& model, const std::string& concept_id) {
  auto it = model.concept_knowledge.find(concept_id);
  return it != model.concept_knowledge.end() && it->second.level >= kMasteryBar;
}

struct NextConcept {
  std::optional<std::string> concept_id;  // nullopt: curriculum done
  RuleTrace trace;
};

inline NextConcept next_concept(const KnowledgeBase& kb, const LearnerModel& model) {
  for (const auto& cid : kb.curriculum_order()) {
    if (is_mastered(model, cid)) continue;
    return {cid, {{"SEQ.curriculum", "'" + cid + "' is the first concept in prerequisite order "
                                     "below the mastery bar"}}};
  }
  return {std::nullopt, {{"SEQ.done", "every concept is at or above the mastery bar"}}};
}

inline std::vector<PrerequisiteStatus> prerequisite_status(const KnowledgeBase& kb,
                                                           const LearnerModel& model,
                                                           const std::string& concept_id) {
  std::vector<PrerequisiteStatus> out;
  for (const auto& p : kb.concept_at(concept_id).prerequisites)
    out.push_back({p, is_mastered(model, p)});
  return out;
}

}  // namespace simtutor
