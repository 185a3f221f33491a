#pragma once

// Learner identity, learning-style profiling, knowledge and learner levels,
// and the JSON document form of a learner record.

#include <simtutor/errors.hpp>
#include <simtutor/kb.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace simtutor {

enum class LearningStyle { SS, GOA, EIA, CA, DLA };

// Declaration order doubles as the tie-break order for the dominant style.
inline constexpr std::array<LearningStyle, 5> kAllStyles = {
    LearningStyle::SS, LearningStyle::GOA, LearningStyle::EIA, LearningStyle::CA,
    LearningStyle::DLA};

constexpr std::string_view to_string(LearningStyle s) {
  switch (s) {
    case LearningStyle::SS: return "ss";
    case LearningStyle::GOA: return "goa";
    case LearningStyle::EIA: return "eia";
    case LearningStyle::CA: return "ca";
    case LearningStyle::DLA: return "dla";
  }
  return "ss";
}

inline std::optional<LearningStyle> parse_style(std::string_view s) {
  for (auto st : kAllStyles)
    if (to_string(st) == s) return st;
  return std::nullopt;
}

struct QuestionnaireItem {
  std::string id;
  std::string prompt;
  LearningStyle target_style = LearningStyle::SS;
};

struct Questionnaire {
  std::vector<QuestionnaireItem> items;
};

inline constexpr int kMinResponse = 1;
inline constexpr int kMaxResponse = 5;

struct StyleProfile {
  std::map<LearningStyle, int> scores;
  LearningStyle dominant = LearningStyle::SS;

  friend bool operator==(const StyleProfile&, const StyleProfile&) = default;
};

enum class KnowledgeLevel { Weak, Average, Good, VeryGood, Excellent };

constexpr std::string_view to_string(KnowledgeLevel k) {
  switch (k) {
    case KnowledgeLevel::Weak: return "weak";
    case KnowledgeLevel::Average: return "average";
    case KnowledgeLevel::Good: return "good";
    case KnowledgeLevel::VeryGood: return "very_good";
    case KnowledgeLevel::Excellent: return "excellent";
  }
  return "weak";
}

inline std::optional<KnowledgeLevel> parse_knowledge_level(std::string_view s) {
  for (auto k : {KnowledgeLevel::Weak, KnowledgeLevel::Average, KnowledgeLevel::Good,
                 KnowledgeLevel::VeryGood, KnowledgeLevel::Excellent})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

enum class LearnerLevel { Weak, SlowLearner, Smart, Genius };

inline constexpr std::array<LearnerLevel, 4> kAllLearnerLevels = {
    LearnerLevel::Weak, LearnerLevel::SlowLearner, LearnerLevel::Smart, LearnerLevel::Genius};

constexpr std::string_view to_string(LearnerLevel l) {
  switch (l) {
    case LearnerLevel::Weak: return "weak";
    case LearnerLevel::SlowLearner: return "slow_learner";
    case LearnerLevel::Smart: return "smart";
    case LearnerLevel::Genius: return "genius";
  }
  return "slow_learner";
}

inline std::optional<LearnerLevel> parse_learner_level(std::string_view s) {
  for (auto l : kAllLearnerLevels)
    if (to_string(l) == s) return l;
  return std::nullopt;
}

struct ConceptKnowledge {
  int last_score = 0;
  KnowledgeLevel level = KnowledgeLevel::Weak;
  int attempts = 0;

  friend bool operator==(const ConceptKnowledge&, const ConceptKnowledge&) = default;
};

// One line of the learner's permanent record. Session transcript entries use
// kind "enter:<state>"; model updates use "questionnaire" and "post_test".
struct LearningEvent {
  std::int64_t timestamp_ms = 0;
  std::string kind;
  std::string concept_id;
  std::optional<int> score;
  json detail = json::object();

  friend bool operator==(const LearningEvent&, const LearningEvent&) = default;
};

inline constexpr std::string_view kPostTestEvent = "post_test";

struct LearnerModel {
  std::string learner_id;
  std::string display_name;
  std::optional<StyleProfile> style;
  LearnerLevel level = LearnerLevel::SlowLearner;
  std::map<std::string, ConceptKnowledge> concept_knowledge;
  std::set<std::string> asked_questions;
  std::vector<LearningEvent> events;
  // Plan seeds derive from (seed, plans_issued) so whole sessions replay.
  std::uint64_t seed = 0;
  std::uint64_t plans_issued = 0;

  friend bool operator==(const LearnerModel&, const LearnerModel&) = default;
};

inline constexpr int kRecordSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Operations

inline void validate_questionnaire(const Questionnaire& q) {
  std::vector<Violation> violations;
  std::set<std::string> ids;
  std::set<LearningStyle> targeted;
  for (std::size_t i = 0; i < q.items.size(); ++i) {
    const auto& item = q.items[i];
    const auto path = "$[" + std::to_string(i) + "]";
    if (item.id.empty()) violations.push_back({path + ".id", "empty item id"});
    if (!ids.insert(item.id).second)
      violations.push_back({path + ".id", "duplicate item id '" + item.id + "'"});
    targeted.insert(item.target_style);
  }
  for (auto s : kAllStyles)
    if (!targeted.contains(s))
      violations.push_back({"$", "no item targets style '" + std::string(to_string(s)) + "'"});
  if (!violations.empty()) throw ValidationError(std::move(violations));
}

inline StyleProfile score_questionnaire(const Questionnaire& q,
                                        const std::map<std::string, int>& responses) {
  StyleProfile profile;
  for (auto s : kAllStyles) profile.scores[s] = 0;
  for (const auto& item : q.items) {
    auto it = responses.find(item.id);
    if (it == responses.end())
      throw Error(ErrorCode::MissingResponse, "no response for item '" + item.id + "'", item.id);
    if (it->second < kMinResponse || it->second > kMaxResponse)
      throw Error(ErrorCode::OutOfRangeResponse,
                  "response for item '" + item.id + "' must be in 1..5", item.id);
    profile.scores[item.target_style] += it->second;
  }
  if (responses.size() != q.items.size()) {
    for (const auto& [id, value] : responses) {
      bool known = std::any_of(q.items.begin(), q.items.end(),
                               [&](const QuestionnaireItem& item) { return item.id == id; });
      if (!known) throw Error(ErrorCode::UnknownItem, "unknown questionnaire item '" + id + "'", id);
    }
  }
  for (auto s : kAllStyles)
    if (profile.scores[s] > profile.scores[profile.dominant]) profile.dominant = s;
  return profile;
}

inline KnowledgeLevel classify_knowledge(int score) {
  if (score < 0 || score > 100)
    throw Error(ErrorCode::OutOfRange, "score " + std::to_string(score) + " outside 0..100");
  if (score >= 86) return KnowledgeLevel::Excellent;
  if (score >= 71) return KnowledgeLevel::VeryGood;
  if (score >= 51) return KnowledgeLevel::Good;
  if (score >= 31) return KnowledgeLevel::Average;
  return KnowledgeLevel::Weak;
}

inline constexpr std::size_t kLevelWindow = 5;

inline LearnerLevel derive_learner_level(const LearnerModel& model) {
  std::vector<int> recent;
  for (auto it = model.events.rbegin(); it != model.events.rend() && recent.size() < kLevelWindow;
       ++it)
    if (it->kind == kPostTestEvent && it->score) recent.push_back(*it->score);
  if (recent.empty()) return LearnerLevel::SlowLearner;
  double mean = 0;
  for (int s : recent) mean += s;
  mean /= static_cast<double>(recent.size());
  if (mean < 31) return LearnerLevel::Weak;
  if (mean < 51) return LearnerLevel::SlowLearner;
  if (mean < 86) return LearnerLevel::Smart;
  return LearnerLevel::Genius;
}

inline LearnerModel update_after_posttest(LearnerModel model, const KnowledgeBase& kb,
                                          const std::string& concept_id, int score,
                                          std::int64_t timestamp_ms = 0,
                                          std::string_view source = "post_test") {
  if (!kb.find_concept(concept_id))
    throw Error(ErrorCode::UnknownConcept, "unknown concept '" + concept_id + "'", concept_id);
  auto level = classify_knowledge(score);
  auto& entry = model.concept_knowledge[concept_id];
  entry.last_score = score;
  entry.level = level;
  entry.attempts += 1;
  model.events.push_back({timestamp_ms, std::string(kPostTestEvent), concept_id, score,
                          json{{"level", to_string(level)},
                               {"attempt", entry.attempts},
                               {"source", source}}});
  model.level = derive_learner_level(model);
  return model;
}

// Round-half-up integer mean; unattempted concepts count as 0.
inline int aggregate_topic_knowledge(const LearnerModel& model, const Topic& topic) {
  if (topic.concept_ids.empty()) return 0;
  long long sum = 0;
  for (const auto& cid : topic.concept_ids) {
    auto it = model.concept_knowledge.find(cid);
    if (it != model.concept_knowledge.end()) sum += it->second.last_score;
  }
  const long long n = static_cast<long long>(topic.concept_ids.size());
  return static_cast<int>((2 * sum + n) / (2 * n));
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const StyleProfile& p) {
  json scores = json::object();
  for (const auto& [s, v] : p.scores) scores[std::string(to_string(s))] = v;
  return {{"scores", scores}, {"dominant", to_string(p.dominant)}};
}

inline json to_json(const LearningEvent& e) {
  json j{{"timestamp_ms", e.timestamp_ms}, {"kind", e.kind}, {"concept_id", e.concept_id}};
  j["score"] = e.score ? json(*e.score) : json(nullptr);
  j["detail"] = e.detail;
  return j;
}

inline json to_json(const LearnerModel& m) {
  json knowledge = json::object();
  for (const auto& [cid, k] : m.concept_knowledge)
    knowledge[cid] = {{"last_score", k.last_score},
                      {"level", to_string(k.level)},
                      {"attempts", k.attempts}};
  json events = json::array();
  for (const auto& e : m.events) events.push_back(to_json(e));
  return {{"schema_version", kRecordSchemaVersion},
          {"learner_id", m.learner_id},
          {"display_name", m.display_name},
          {"style", m.style ? to_json(*m.style) : json(nullptr)},
          {"level", to_string(m.level)},
          {"concept_knowledge", knowledge},
          {"asked_questions", m.asked_questions},
          {"events", events},
          {"seed", m.seed},
          {"plans_issued", m.plans_issued}};
}

inline LearnerModel learner_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kRecordSchemaVersion)
      throw Error(ErrorCode::Storage, "unsupported learner record schema_version");
    LearnerModel m;
    m.learner_id = j.at("learner_id").get<std::string>();
    m.display_name = j.at("display_name").get<std::string>();
    if (!j.at("style").is_null()) {
      StyleProfile p;
      for (const auto& [k, v] : j.at("style").at("scores").items()) {
        auto s = parse_style(k);
        if (!s) throw Error(ErrorCode::Storage, "unknown style '" + k + "'");
        p.scores[*s] = v.get<int>();
      }
      auto dom = parse_style(j.at("style").at("dominant").get<std::string>());
      if (!dom) throw Error(ErrorCode::Storage, "unknown dominant style");
      p.dominant = *dom;
      m.style = p;
    }
    auto level = parse_learner_level(j.at("level").get<std::string>());
    if (!level) throw Error(ErrorCode::Storage, "unknown learner level");
    m.level = *level;
    for (const auto& [cid, k] : j.at("concept_knowledge").items()) {
      auto kl = parse_knowledge_level(k.at("level").get<std::string>());
      if (!kl) throw Error(ErrorCode::Storage, "unknown knowledge level");
      m.concept_knowledge[cid] = {k.at("last_score").get<int>(), *kl, k.at("attempts").get<int>()};
    }
    m.asked_questions = j.at("asked_questions").get<std::set<std::string>>();
    for (const auto& e : j.at("events")) {
      LearningEvent ev;
      ev.timestamp_ms = e.at("timestamp_ms").get<std::int64_t>();
      ev.kind = e.at("kind").get<std::string>();
      ev.concept_id = e.at("concept_id").get<std::string>();
      if (!e.at("score").is_null()) ev.score = e.at("score").get<int>();
      ev.detail = e.at("detail");
      m.events.push_back(std::move(ev));
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.plans_issued = j.at("plans_issued").get<std::uint64_t>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Storage, std::string("malformed learner record: ") + e.what());
  }
}

// Accepts a bare item array or {"items": [...]} (other keys are ignored).
inline Questionnaire questionnaire_from_json(const json& doc) {
  const bool wrapped = doc.is_object() && doc.contains("items");
  const json& j = wrapped ? doc.at("items") : doc;
  const std::string base = wrapped ? "$.items" : "$";
  if (!j.is_array())
    throw ValidationError(std::vector<Violation>{{base, "questionnaire items must be a JSON array"}});
  Questionnaire q;
  std::vector<Violation> violations;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto path = base + "[" + std::to_string(i) + "]";
    const auto& node = j[i];
    QuestionnaireItem item;
    try {
      item.id = node.at("id").get<std::string>();
      item.prompt = node.at("prompt").get<std::string>();
      auto style = parse_style(node.at("target_style").get<std::string>());
      if (!style) {
        violations.push_back({path + ".target_style", "expected ss|goa|eia|ca|dla"});
        continue;
      }
      item.target_style = *style;
    } catch (const json::exception&) {
      violations.push_back({path, "item needs string fields id, prompt, target_style"});
      continue;
    }
    q.items.push_back(std::move(item));
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
  validate_questionnaire(q);
  return q;
}

inline Questionnaire load_questionnaire_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open questionnaire " + path.string());
  try {
    return questionnaire_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("malformed questionnaire: ") + e.what());
  }
}

inline json to_json(const Questionnaire& q) {
  json items = json::array();
  for (const auto& item : q.items)
    items.push_back(
        {{"id", item.id}, {"prompt", item.prompt}, {"target_style", to_string(item.target_style)}});
  return items;
}

}  // namespace simtutor
