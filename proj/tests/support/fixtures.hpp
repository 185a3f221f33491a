#pragma once

// Test-side builders and oracles. Oracles here never call the engine code they
// check: they recompute from raw inputs by table lookup or brute force.

#include <simtutor/simtutor.hpp>

#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#ifndef SIMTUTOR_SOURCE_DIR
#define SIMTUTOR_SOURCE_DIR "."
#endif

namespace simtutor::testing {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(SIMTUTOR_SOURCE_DIR) / rel;
}

inline std::shared_ptr<const KnowledgeBase> sample_kb() {
  static auto kb = std::make_shared<const KnowledgeBase>(
      load_knowledge_base_file(source_path("data/sample_kb.json")));
  return kb;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("simtutor-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// KB documents

inline json question_json(const std::string& id, const std::string& cid, const std::string& sid,
                          Difficulty d, int weight = 1, int correct = 0) {
  return {{"id", id},
          {"concept_id", cid},
          {"section_id", sid},
          {"difficulty", to_string(d)},
          {"weight", weight},
          {"body", "question " + id},
          {"choices", {"a", "b", "c", "d"}},
          {"correct_index", correct}};
}

inline json section_json(const std::string& id, int importance) {
  json imp = json::object();
  for (auto m : kAllMethods) imp[std::string(to_string(m))] = importance;
  return {{"id", id}, {"title", "section " + id}, {"importance", imp}};
}

inline json all_assets(const std::string& cid) {
  json a = json::object();
  for (auto m : kAllMethods) a[std::string(to_string(m))] = cid + "/" + std::string(to_string(m));
  return a;
}

// One topic "t", concepts given in order; `n_sections` sections each with
// `per_cell` questions at every difficulty.
inline json linear_kb_doc(const std::vector<std::pair<std::string, std::vector<std::string>>>& concepts,
                          int n_sections, int per_cell) {
  json doc{{"topics", json::array()}, {"concepts", json::array()}, {"questions", json::array()}};
  json ids = json::array();
  for (const auto& [cid, prereqs] : concepts) {
    ids.push_back(cid);
    json sections = json::array();
    for (int s = 0; s < n_sections; ++s) sections.push_back(section_json("s" + std::to_string(s), 10 - s));
    doc["concepts"].push_back({{"id", cid},
                               {"title", cid},
                               {"prerequisites", prereqs},
                               {"sections", sections},
                               {"assets", all_assets(cid)}});
    for (int s = 0; s < n_sections; ++s)
      for (auto d : kAllDifficulties)
        for (int k = 0; k < per_cell; ++k)
          doc["questions"].push_back(question_json(
              cid + "-s" + std::to_string(s) + "-" + std::string(to_string(d)) + "-" + std::to_string(k),
              cid, "s" + std::to_string(s), d, static_cast<int>(index_of(d)) + 1,
              (k + static_cast<int>(index_of(d))) % 4));
  }
  doc["topics"].push_back({{"id", "t"}, {"title", "topic"}, {"concept_ids", ids}});
  return doc;
}

inline std::shared_ptr<const KnowledgeBase> make_kb(const json& doc) {
  return std::make_shared<const KnowledgeBase>(knowledge_base_from_json(doc));
}

// ---------------------------------------------------------------------------
// Oracles

// Score bands as published, by literal lookup.
inline std::string band_oracle(int score) {
  struct Band {
    int lo, hi;
    const char* name;
  };
  static constexpr std::array<Band, 5> bands{{{86, 100, "excellent"},
                                              {71, 85, "very_good"},
                                              {51, 70, "good"},
                                              {31, 50, "average"},
                                              {0, 30, "weak"}}};
  for (const auto& b : bands)
    if (score >= b.lo && score <= b.hi) return b.name;
  return "";
}

struct PlanFacts {
  std::string id;
  std::string section;
  Difficulty difficulty;
};

// Smallest plan size satisfying R1-R3 and the mix, by exhaustive subset
// enumeration over unused questions; nullopt when no plan exists.
inline std::optional<int> min_plan_size_oracle(const std::vector<PlanFacts>& unused,
                                               const std::set<std::string>& sections,
                                               const std::array<int, 3>& mix) {
  const std::size_t n = unused.size();
  std::optional<int> best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const int size = std::popcount(mask);
    if (best && size >= *best) continue;
    std::array<int, 3> count{};
    std::set<std::string> covered;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) {
        ++count[index_of(unused[i].difficulty)];
        covered.insert(unused[i].section);
      }
    bool ok = covered == sections;
    for (std::size_t d = 0; d < 3; ++d) ok = ok && count[d] >= mix[d] && count[d] >= 1;
    if (ok) best = size;
  }
  return best;
}

// Rule audit of a single plan, recomputed from the raw KB maps.
inline std::vector<std::string> audit_plan(const KnowledgeBase& kb, const LearnerModel& before,
                                           const TestPlan& plan) {
  std::vector<std::string> problems;
  const auto& c = kb.concepts().at(plan.concept_id);
  std::set<std::string> ids, sections;
  std::set<Difficulty> levels;
  int total = 0;
  if (plan.weights.size() != plan.question_ids.size()) problems.push_back("weights not parallel");
  for (std::size_t i = 0; i < plan.question_ids.size(); ++i) {
    const auto& qid = plan.question_ids[i];
    auto it = kb.questions().find(qid);
    if (it == kb.questions().end()) {
      problems.push_back("unknown id " + qid);
      continue;
    }
    const auto& q = it->second;
    if (q.concept_id != plan.concept_id) problems.push_back("foreign question " + qid);
    if (!ids.insert(qid).second) problems.push_back("duplicate " + qid);
    if (before.asked_questions.contains(qid)) problems.push_back("R1 repeat " + qid);
    sections.insert(q.section_id);
    levels.insert(q.difficulty);
    if (i < plan.weights.size() && plan.weights[i] != q.weight) problems.push_back("weight snapshot");
    total += q.weight;
  }
  if (sections.size() != c.sections.size()) problems.push_back("R2 section missing");
  if (levels.size() != 3) problems.push_back("R3 difficulty missing");
  if (total != plan.total_weight) problems.push_back("total_weight mismatch");
  return problems;
}

// Answers every question of a plan correctly (true) or with a wrong choice.
inline std::map<std::string, int> answer_all(const KnowledgeBase& kb, const TestPlan& plan,
                                             bool correct) {
  std::map<std::string, int> out;
  for (const auto& qid : plan.question_ids) {
    const auto& q = kb.questions().at(qid);
    out[qid] = correct ? q.correct_index : (q.correct_index + 1) % static_cast<int>(q.choices.size());
  }
  return out;
}

inline std::map<std::string, int> responses_for(const Questionnaire& q, LearningStyle favoured) {
  std::map<std::string, int> out;
  for (const auto& item : q.items) out[item.id] = item.target_style == favoured ? 5 : 2;
  return out;
}

inline Questionnaire shipped_questionnaire() {
  return load_questionnaire_file(source_path("data/questionnaire.json"));
}

}  // namespace simtutor::testing
