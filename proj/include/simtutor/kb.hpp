#pragma once

// Content knowledge base: topics -> concepts -> sections, plus the question
// bank and per-method presentation assets. Loaded once, immutable afterwards.

#include <simtutor/errors.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <queue>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace simtutor {

using json = nlohmann::json;

enum class EducationMethod { Film, DynamicView, Game, Puzzle, Text };

inline constexpr std::array<EducationMethod, 5> kAllMethods = {
    EducationMethod::Film, EducationMethod::DynamicView, EducationMethod::Game,
    EducationMethod::Puzzle, EducationMethod::Text};

constexpr std::string_view to_string(EducationMethod m) {
  switch (m) {
    case EducationMethod::Film: return "film";
    case EducationMethod::DynamicView: return "dynamic_view";
    case EducationMethod::Game: return "game";
    case EducationMethod::Puzzle: return "puzzle";
    case EducationMethod::Text: return "text";
  }
  return "text";
}

inline std::optional<EducationMethod> parse_method(std::string_view s) {
  for (auto m : kAllMethods)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

enum class Difficulty { Easy, Medium, Hard };

inline constexpr std::array<Difficulty, 3> kAllDifficulties = {
    Difficulty::Easy, Difficulty::Medium, Difficulty::Hard};

constexpr std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "easy";
}

inline std::optional<Difficulty> parse_difficulty(std::string_view s) {
  for (auto d : kAllDifficulties)
    if (to_string(d) == s) return d;
  return std::nullopt;
}

constexpr std::size_t index_of(Difficulty d) { return static_cast<std::size_t>(d); }

struct Question {
  std::string id;
  std::string concept_id;
  std::string section_id;
  Difficulty difficulty = Difficulty::Easy;
  int weight = 1;
  std::string body;
  std::vector<std::string> choices;
  int correct_index = 0;

  friend bool operator==(const Question&, const Question&) = default;
};

struct Section {
  std::string id;
  std::string title;
  std::map<EducationMethod, int> importance;

  friend bool operator==(const Section&, const Section&) = default;
};

struct Concept {
  std::string id;
  std::string title;
  std::vector<Section> sections;
  std::vector<std::string> prerequisites;
  // Opaque references (URLs, file names); the engine never dereferences them.
  std::map<EducationMethod, std::string> assets;

  bool has_section(std::string_view section_id) const {
    return std::any_of(sections.begin(), sections.end(),
                       [&](const Section& s) { return s.id == section_id; });
  }

  friend bool operator==(const Concept&, const Concept&) = default;
};

struct Topic {
  std::string id;
  std::string title;
  std::vector<std::string> concept_ids;

  friend bool operator==(const Topic&, const Topic&) = default;
};

namespace detail {

// Section whose importance under `method` is strictly maximal, or nullopt on a tie.
inline std::optional<std::size_t> argmax_section(const Concept& c, EducationMethod method) {
  std::optional<std::size_t> best;
  int best_value = 0;
  bool tie = false;
  for (std::size_t i = 0; i < c.sections.size(); ++i) {
    auto it = c.sections[i].importance.find(method);
    if (it == c.sections[i].importance.end()) continue;
    if (!best || it->second > best_value) {
      best = i;
      best_value = it->second;
      tie = false;
    } else if (it->second == best_value) {
      tie = true;
    }
  }
  if (tie) return std::nullopt;
  return best;
}

inline bool valid_id(const std::string& id) {
  static const std::regex pattern("[a-z0-9_-]+");
  return std::regex_match(id, pattern);
}

// Kahn's algorithm; `rank` orders ready nodes. Returns nullopt on a cycle.
template <typename Rank>
std::optional<std::vector<std::string>> topo_sort(const std::map<std::string, Concept>& concepts,
                                                  Rank rank) {
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> dependents;
  for (const auto& [id, c] : concepts) {
    indegree.try_emplace(id, 0);
    for (const auto& p : c.prerequisites) {
      if (!concepts.contains(p)) continue;
      ++indegree[id];
      dependents[p].push_back(id);
    }
  }
  auto cmp = [&](const std::string& a, const std::string& b) { return rank(b) < rank(a); };
  std::priority_queue<std::string, std::vector<std::string>, decltype(cmp)> ready(cmp);
  for (const auto& [id, deg] : indegree)
    if (deg == 0) ready.push(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    auto id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto& d : dependents[id])
      if (--indegree[d] == 0) ready.push(d);
  }
  if (order.size() != concepts.size()) return std::nullopt;
  return order;
}

}  // namespace detail

class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  const std::vector<Topic>& topics() const { return topics_; }
  const std::map<std::string, Concept>& concepts() const { return concepts_; }
  const std::map<std::string, Question>& questions() const { return questions_; }

  const Concept* find_concept(std::string_view id) const {
    auto it = concepts_.find(std::string(id));
    return it == concepts_.end() ? nullptr : &it->second;
  }
  const Question* find_question(std::string_view id) const {
    auto it = questions_.find(std::string(id));
    return it == questions_.end() ? nullptr : &it->second;
  }

  const Concept& concept_at(std::string_view id) const {
    if (const auto* c = find_concept(id)) return *c;
    throw Error(ErrorCode::UnknownConcept, "unknown concept '" + std::string(id) + "'",
                std::string(id));
  }
  const Question& question_at(std::string_view id) const {
    if (const auto* q = find_question(id)) return *q;
    throw Error(ErrorCode::UnknownQuestion, "unknown question '" + std::string(id) + "'",
                std::string(id));
  }

  // Question ids of a concept, sorted by id.
  const std::vector<std::string>& questions_of(std::string_view concept_id) const {
    static const std::vector<std::string> empty;
    auto it = by_concept_.find(std::string(concept_id));
    return it == by_concept_.end() ? empty : it->second;
  }

  // Topological order under prerequisites, ties broken by concept id.
  const std::vector<std::string>& topological_order() const { return topo_by_id_; }

  // Topological order, ties broken by position in the topic listing.
  const std::vector<std::string>& curriculum_order() const { return topo_by_curriculum_; }

  const Topic* topic_of(std::string_view concept_id) const {
    for (const auto& t : topics_)
      if (std::find(t.concept_ids.begin(), t.concept_ids.end(), concept_id) != t.concept_ids.end())
        return &t;
    return nullptr;
  }

  friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
    return a.topics_ == b.topics_ && a.concepts_ == b.concepts_ && a.questions_ == b.questions_;
  }

  // Validates and builds. Throws ValidationError listing every violation found.
  static KnowledgeBase build(std::vector<Topic> topics, std::map<std::string, Concept> concepts,
                             std::map<std::string, Question> questions,
                             std::vector<Violation> violations = {});

 private:
  std::vector<Topic> topics_;
  std::map<std::string, Concept> concepts_;
  std::map<std::string, Question> questions_;
  std::map<std::string, std::vector<std::string>> by_concept_;
  std::vector<std::string> topo_by_id_;
  std::vector<std::string> topo_by_curriculum_;
};

inline KnowledgeBase KnowledgeBase::build(std::vector<Topic> topics,
                                          std::map<std::string, Concept> concepts,
                                          std::map<std::string, Question> questions,
                                          std::vector<Violation> violations) {
  auto add = [&](std::string path, std::string message) {
    violations.push_back({std::move(path), std::move(message)});
  };

  if (topics.empty()) add("$.topics", "at least one topic is required");

  std::set<std::string> topic_ids;
  std::map<std::string, std::string> owner;
  for (std::size_t ti = 0; ti < topics.size(); ++ti) {
    const auto& t = topics[ti];
    const auto path = "$.topics[" + std::to_string(ti) + "]";
    if (!detail::valid_id(t.id)) add(path + ".id", "id must match [a-z0-9_-]+");
    if (!topic_ids.insert(t.id).second) add(path + ".id", "duplicate topic id '" + t.id + "'");
    if (t.concept_ids.empty()) add(path + ".concept_ids", "topic lists no concepts");
    for (std::size_t ci = 0; ci < t.concept_ids.size(); ++ci) {
      const auto& cid = t.concept_ids[ci];
      const auto cpath = path + ".concept_ids[" + std::to_string(ci) + "]";
      if (!concepts.contains(cid)) add(cpath, "dangling concept reference '" + cid + "'");
      auto [it, fresh] = owner.emplace(cid, t.id);
      if (!fresh) add(cpath, "concept '" + cid + "' already belongs to topic '" + it->second + "'");
    }
  }

  for (const auto& [id, c] : concepts) {
    const auto path = "$.concepts[id=" + id + "]";
    if (!detail::valid_id(id)) add(path + ".id", "id must match [a-z0-9_-]+");
    if (!owner.contains(id)) add(path, "concept is not listed by any topic");
    if (c.sections.empty()) add(path + ".sections", "concept has no sections");
    if (c.assets.empty()) add(path + ".assets", "concept has no presentation assets");
    if (!c.assets.contains(EducationMethod::Text))
      add(path + ".assets.text", "a text asset is mandatory");
    for (const auto& p : c.prerequisites)
      if (!concepts.contains(p)) add(path + ".prerequisites", "dangling prerequisite '" + p + "'");

    std::set<std::string> section_ids;
    for (std::size_t si = 0; si < c.sections.size(); ++si) {
      const auto& s = c.sections[si];
      const auto spath = path + ".sections[" + std::to_string(si) + "]";
      if (!detail::valid_id(s.id)) add(spath + ".id", "id must match [a-z0-9_-]+");
      if (!section_ids.insert(s.id).second) add(spath + ".id", "duplicate section id '" + s.id + "'");
      for (const auto& [m, w] : s.importance)
        if (w < 1)
          add(spath + ".importance." + std::string(to_string(m)), "importance must be >= 1");
      for (const auto& [m, asset] : c.assets)
        if (!s.importance.contains(m))
          add(spath + ".importance." + std::string(to_string(m)),
              "missing importance for method used by the concept's assets");
    }

    std::optional<std::size_t> common;
    bool differs = false;
    for (const auto& [m, asset] : c.assets) {
      auto best = detail::argmax_section(c, m);
      if (!best) {
        add(path + ".sections", "importance tie for method '" + std::string(to_string(m)) +
                                    "': the most important section must be unique");
        continue;
      }
      if (common && *common != *best) differs = true;
      common = best;
    }
    if (differs)
      add(path + ".sections", "most important section differs between education methods");
  }

  std::map<std::string, std::vector<std::string>> by_concept;
  std::map<std::pair<std::string, std::string>, std::array<int, 3>> coverage;
  for (const auto& [id, q] : questions) {
    const auto path = "$.questions[id=" + id + "]";
    if (!detail::valid_id(id)) add(path + ".id", "id must match [a-z0-9_-]+");
    if (q.weight < 1) add(path + ".weight", "weight must be >= 1");
    if (q.choices.size() < 2) add(path + ".choices", "at least two choices are required");
    if (q.correct_index < 0 || q.correct_index >= static_cast<int>(q.choices.size()))
      add(path + ".correct_index", "correct_index out of range");
    auto cit = concepts.find(q.concept_id);
    if (cit == concepts.end()) {
      add(path + ".concept_id", "dangling concept reference '" + q.concept_id + "'");
      continue;
    }
    if (!cit->second.has_section(q.section_id)) {
      add(path + ".section_id",
          "section '" + q.section_id + "' does not belong to concept '" + q.concept_id + "'");
      continue;
    }
    by_concept[q.concept_id].push_back(id);
    ++coverage[{q.concept_id, q.section_id}][index_of(q.difficulty)];
  }
  for (const auto& [id, c] : concepts) {
    for (const auto& s : c.sections) {
      auto counts = coverage[{id, s.id}];
      for (auto d : kAllDifficulties)
        if (counts[index_of(d)] == 0)
          add("$.concepts[id=" + id + "].sections[id=" + s.id + "]",
              "no " + std::string(to_string(d)) + " question for this section");
    }
  }

  KnowledgeBase kb;
  std::map<std::string, std::size_t> position;
  for (const auto& t : topics)
    for (const auto& cid : t.concept_ids) position.try_emplace(cid, position.size());

  auto by_id = detail::topo_sort(concepts, [](const std::string& id) { return id; });
  if (!by_id) add("$.concepts", "cyclic prerequisites");

  if (!violations.empty()) throw ValidationError(std::move(violations));

  kb.topo_by_id_ = std::move(*by_id);
  kb.topo_by_curriculum_ = *detail::topo_sort(concepts, [&](const std::string& id) {
    return std::pair{position.at(id), id};
  });
  kb.topics_ = std::move(topics);
  kb.concepts_ = std::move(concepts);
  kb.questions_ = std::move(questions);
  kb.by_concept_ = std::move(by_concept);
  return kb;
}

inline std::string most_important_section(const Concept& c) {
  if (c.sections.size() == 1) return c.sections.front().id;
  EducationMethod probe = c.assets.empty() ? EducationMethod::Text : c.assets.begin()->first;
  auto best = detail::argmax_section(c, probe);
  if (!best) throw Error(ErrorCode::Validation, "importance tie in concept '" + c.id + "'", c.id);
  return c.sections[*best].id;
}

// ---------------------------------------------------------------------------
// JSON document format

namespace detail {

class Reader {
 public:
  std::vector<Violation>& violations;

  template <typename T>
  bool get(const json& obj, const std::string& path, const char* key, T& out) {
    if (!obj.is_object() || !obj.contains(key)) {
      violations.push_back({path + "." + key, "missing required field"});
      return false;
    }
    try {
      out = obj.at(key).get<T>();
      return true;
    } catch (const json::exception&) {
      violations.push_back({path + "." + key, "wrong type"});
      return false;
    }
  }

  const json* array(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_array()) {
      violations.push_back({path + "." + key, "expected an array"});
      return nullptr;
    }
    return &obj.at(key);
  }
};

}  // namespace detail

inline KnowledgeBase knowledge_base_from_json(const json& doc) {
  std::vector<Violation> violations;
  detail::Reader r{violations};
  std::vector<Topic> topics;
  std::map<std::string, Concept> concepts;
  std::map<std::string, Question> questions;

  if (!doc.is_object()) throw ValidationError(std::vector<Violation>{{"$", "document must be a JSON object"}});

  if (const auto* arr = r.array(doc, "$", "topics")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto path = "$.topics[" + std::to_string(i) + "]";
      Topic t;
      r.get(arr->at(i), path, "id", t.id);
      r.get(arr->at(i), path, "title", t.title);
      r.get(arr->at(i), path, "concept_ids", t.concept_ids);
      topics.push_back(std::move(t));
    }
  }

  if (const auto* arr = r.array(doc, "$", "concepts")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& node = arr->at(i);
      const auto path = "$.concepts[" + std::to_string(i) + "]";
      Concept c;
      r.get(node, path, "id", c.id);
      r.get(node, path, "title", c.title);
      if (node.contains("prerequisites")) r.get(node, path, "prerequisites", c.prerequisites);
      if (const auto* secs = r.array(node, path, "sections")) {
        for (std::size_t j = 0; j < secs->size(); ++j) {
          const auto spath = path + ".sections[" + std::to_string(j) + "]";
          Section s;
          r.get(secs->at(j), spath, "id", s.id);
          r.get(secs->at(j), spath, "title", s.title);
          std::map<std::string, int> raw;
          if (r.get(secs->at(j), spath, "importance", raw)) {
            for (const auto& [k, v] : raw) {
              if (auto m = parse_method(k)) s.importance[*m] = v;
              else violations.push_back({spath + ".importance." + k, "unknown education method"});
            }
          }
          c.sections.push_back(std::move(s));
        }
      }
      std::map<std::string, std::string> raw_assets;
      if (r.get(node, path, "assets", raw_assets)) {
        for (const auto& [k, v] : raw_assets) {
          if (auto m = parse_method(k)) c.assets[*m] = v;
          else violations.push_back({path + ".assets." + k, "unknown education method"});
        }
      }
      if (concepts.contains(c.id))
        violations.push_back({path + ".id", "duplicate concept id '" + c.id + "'"});
      else
        concepts.emplace(c.id, std::move(c));
    }
  }

  if (const auto* arr = r.array(doc, "$", "questions")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& node = arr->at(i);
      const auto path = "$.questions[" + std::to_string(i) + "]";
      Question q;
      std::string difficulty;
      r.get(node, path, "id", q.id);
      r.get(node, path, "concept_id", q.concept_id);
      r.get(node, path, "section_id", q.section_id);
      r.get(node, path, "weight", q.weight);
      r.get(node, path, "body", q.body);
      r.get(node, path, "choices", q.choices);
      r.get(node, path, "correct_index", q.correct_index);
      if (r.get(node, path, "difficulty", difficulty)) {
        if (auto d = parse_difficulty(difficulty)) q.difficulty = *d;
        else violations.push_back({path + ".difficulty", "expected easy|medium|hard"});
      }
      if (questions.contains(q.id))
        violations.push_back({path + ".id", "duplicate question id '" + q.id + "'"});
      else
        questions.emplace(q.id, std::move(q));
    }
  }

  return KnowledgeBase::build(std::move(topics), std::move(concepts), std::move(questions),
                              std::move(violations));
}

inline KnowledgeBase load_knowledge_base(std::istream& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("malformed knowledge base: ") + e.what());
  }
  return knowledge_base_from_json(doc);
}

inline KnowledgeBase load_knowledge_base_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open knowledge base " + path.string());
  return load_knowledge_base(in);
}

inline json to_json(const KnowledgeBase& kb) {
  json doc{{"topics", json::array()}, {"concepts", json::array()}, {"questions", json::array()}};
  for (const auto& t : kb.topics())
    doc["topics"].push_back({{"id", t.id}, {"title", t.title}, {"concept_ids", t.concept_ids}});
  for (const auto& [id, c] : kb.concepts()) {
    json sections = json::array();
    for (const auto& s : c.sections) {
      json importance = json::object();
      for (const auto& [m, w] : s.importance) importance[std::string(to_string(m))] = w;
      sections.push_back({{"id", s.id}, {"title", s.title}, {"importance", importance}});
    }
    json assets = json::object();
    for (const auto& [m, a] : c.assets) assets[std::string(to_string(m))] = a;
    doc["concepts"].push_back({{"id", id},
                               {"title", c.title},
                               {"prerequisites", c.prerequisites},
                               {"sections", sections},
                               {"assets", assets}});
  }
  for (const auto& [id, q] : kb.questions())
    doc["questions"].push_back({{"id", id},
                                {"concept_id", q.concept_id},
                                {"section_id", q.section_id},
                                {"difficulty", to_string(q.difficulty)},
                                {"weight", q.weight},
                                {"body", q.body},
                                {"choices", q.choices},
                                {"correct_index", q.correct_index}});
  return doc;
}

}  // namespace simtutor
