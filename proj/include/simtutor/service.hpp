#pragma once

// Tutor service core: learners, bearer tokens, sessions and the JSON request
// handlers. Transport-agnostic; http.hpp binds it to an HTTP server.

#include <simtutor/errors.hpp>
#include <simtutor/kb.hpp>
#include <simtutor/learner.hpp>
#include <simtutor/pedagogy.hpp>
#include <simtutor/record_store.hpp>
#include <simtutor/session.hpp>

#include <nlohmann/json.hpp>

#include <sys/random.h>

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>

namespace simtutor {

struct ApiResponse {
  int status = 200;
  json body;
};

// Every code a 4xx/5xx response may carry.
inline constexpr std::array<std::string_view, 20> kApiErrorCodes = {
    "INVALID_NAME",      "UNAUTHORIZED",      "FORBIDDEN",         "UNKNOWN_SESSION",
    "NOT_FOUND",         "MALFORMED_PAYLOAD", "WRONG_STATE",       "INSUFFICIENT_BANK",
    "MISSING_ANSWER",    "UNKNOWN_QUESTION",  "INVALID_ANSWER",    "MISSING_RESPONSE",
    "OUT_OF_RANGE_RESPONSE", "UNKNOWN_ITEM",  "STORAGE_ERROR",     "INTERNAL",
    "PARSE_ERROR",       "VALIDATION_ERROR",  "CONFIG_ERROR",      "NO_ASSET"};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::WrongState:
    case ErrorCode::InsufficientBank:
      return 409;
    case ErrorCode::MissingAnswer:
    case ErrorCode::UnknownQuestion:
    case ErrorCode::InvalidAnswer:
    case ErrorCode::MissingResponse:
    case ErrorCode::OutOfRangeResponse:
    case ErrorCode::UnknownItem:
      return 422;
    case ErrorCode::NotFound:
      return 404;
    default:
      return 500;
  }
}

inline ApiResponse api_error(int status, std::string_view code, const std::string& message,
                             const std::string& detail = {}) {
  json err{{"code", code}, {"message", message}};
  if (!detail.empty()) err["detail"] = detail;
  return {status, json{{"error", err}}};
}

inline ApiResponse api_error(const Error& e) {
  return api_error(http_status(e.code()), to_string(e.code()), e.what(), e.detail());
}

namespace detail {

inline std::array<unsigned char, 16> random_bytes16() {
  std::array<unsigned char, 16> buf{};
  std::size_t got = 0;
  while (got < buf.size()) {
    auto n = ::getrandom(buf.data() + got, buf.size() - got, 0);
    if (n < 0) throw Error(ErrorCode::Storage, "getrandom failed");
    got += static_cast<std::size_t>(n);
  }
  return buf;
}

inline std::string base64url(const unsigned char* data, std::size_t size) {
  static constexpr char alphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (std::size_t i = 0; i < size; ++i) {
    acc = (acc << 8) | data[i];
    bits += 8;
    while (bits >= 6) {
      bits -= 6;
      out.push_back(alphabet[(acc >> bits) & 0x3f]);
    }
  }
  if (bits > 0) out.push_back(alphabet[(acc << (6 - bits)) & 0x3f]);
  return out;
}

inline std::string new_token() {
  auto bytes = random_bytes16();
  return base64url(bytes.data(), bytes.size());
}

inline std::uint64_t new_seed() {
  auto bytes = random_bytes16();
  std::uint64_t s = 0;
  for (int i = 0; i < 8; ++i) s = (s << 8) | bytes[i];
  return s;
}

// Lowercase alphanumerics; every other run of characters becomes one '-'.
inline std::string learner_id_for(std::string_view name) {
  std::string id;
  for (unsigned char c : name) {
    if (std::isalnum(c)) id.push_back(static_cast<char>(std::tolower(c)));
    else if (!id.empty() && id.back() != '-') id.push_back('-');
  }
  while (!id.empty() && id.back() == '-') id.pop_back();
  if (id.empty()) {
    static constexpr char hex[] = "0123456789abcdef";
    auto h = hash_string(name);
    id = "learner-";
    for (int i = 15; i >= 0; --i) id.push_back(hex[(h >> (i * 4)) & 0xf]);
  }
  return id;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

inline json faq_document() {
  return {{"items",
           json::array(
               {{{"question", "How does the tutor decide what I study next?"},
                 {"answer", "Concepts are taken in curriculum order, prerequisites first. A concept "
                            "stays selected until your post-test reaches the Good band (51 or more)."}},
                {{"question", "Why did I skip a lesson?"},
                 {"answer", "A pre-test score of 86 or more means you already know the concept, so it "
                            "is recorded and the lesson is skipped."}},
                {{"question", "Why did the lesson format change?"},
                 {"answer", "When a post-test falls short, the concept is taught again using the next "
                            "format in the list chosen for your learning style."}},
                {{"question", "Will I see the same question twice?"},
                 {"answer", "No. Every question you have answered is remembered and never asked again."}},
                {{"question", "How are scores turned into levels?"},
                 {"answer", "86-100 Excellent, 71-85 Very good, 51-70 Good, 31-50 Average, 0-30 Weak."}}})}};
}

struct ServiceConfig {
  std::filesystem::path data_dir = "data/learners";
  std::int64_t token_ttl_seconds = 3600;
};

class TutorService {
 public:
  TutorService(std::shared_ptr<const KnowledgeBase> kb, PedagogyConfig pedagogy,
               Questionnaire questionnaire, ServiceConfig config, Clock clock = system_clock_ms)
      : kb_(std::move(kb)),
        pedagogy_(std::move(pedagogy)),
        questionnaire_(std::move(questionnaire)),
        config_(std::move(config)),
        clock_(clock ? std::move(clock) : Clock(system_clock_ms)),
        store_(config_.data_dir) {}

  RecordStore& store() { return store_; }

  ApiResponse register_learner(const json& body) {
    if (!body.is_object() || !body.contains("name") || !body["name"].is_string())
      return api_error(400, "INVALID_NAME", "body must be {\"name\": <non-empty string>}");
    const auto name = detail::trim(body["name"].get<std::string>());
    if (name.empty()) return api_error(400, "INVALID_NAME", "name must not be empty");
    const auto id = detail::learner_id_for(name);
    bool created = false;
    try {
      std::lock_guard reg(register_mutex_);
      if (!store_.exists(id)) {
        LearnerModel m;
        m.learner_id = id;
        m.display_name = name;
        m.seed = detail::new_seed();
        store_.save(m);
        created = true;
      }
    } catch (const Error& e) {
      return api_error(e);
    }
    const auto token = detail::new_token();
    const auto expires = clock_() + config_.token_ttl_seconds * 1000;
    {
      std::lock_guard lock(token_mutex_);
      if (auto old = token_of_.find(id); old != token_of_.end()) tokens_.erase(old->second);
      tokens_[token] = {id, expires};
      token_of_[id] = token;
    }
    return {created ? 201 : 200,
            json{{"learner_id", id}, {"token", token}, {"expires_at_ms", expires}, {"created", created}}};
  }

  ApiResponse create_session(std::string_view authorization) {
    auto learner = authenticate(authorization);
    if (!learner) return unauthorized();
    std::unique_lock lock(sessions_mutex_);
    if (auto it = session_of_.find(*learner); it != session_of_.end())
      return {200, json{{"session_id", it->second}, {"resumed", true}}};
    LearnerModel model;
    try {
      model = store_.load(*learner);
    } catch (const Error& e) {
      return api_error(e);
    }
    auto slot = std::make_shared<Slot>();
    slot->learner_id = *learner;
    slot->session = std::make_unique<Session>(
        kb_, pedagogy_, questionnaire_, std::move(model), clock_,
        [this](const LearnerModel& m) { store_.save(m); });
    auto sid = detail::new_token();
    sessions_[sid] = slot;
    session_of_[*learner] = sid;
    return {201, json{{"session_id", sid}, {"resumed", false}}};
  }

  ApiResponse next_step(std::string_view authorization, const std::string& session_id) {
    auto learner = authenticate(authorization);
    if (!learner) return unauthorized();
    auto slot = find_slot(session_id);
    if (!slot) return api_error(404, "UNKNOWN_SESSION", "no session '" + session_id + "'");
    if (slot->learner_id != *learner)
      return api_error(403, "FORBIDDEN", "session belongs to another learner");
    std::lock_guard lock(slot->mutex);
    try {
      auto& s = *slot->session;
      json step = s.state() == StateKind::SelectingConcept ? s.advance() : s.step();
      step["session_id"] = session_id;
      return {200, step};
    } catch (const Error& e) {
      return api_error(e);
    }
  }

  ApiResponse submit(std::string_view authorization, const std::string& session_id,
                     const json& body) {
    auto learner = authenticate(authorization);
    if (!learner) return unauthorized();
    auto slot = find_slot(session_id);
    if (!slot) return api_error(404, "UNKNOWN_SESSION", "no session '" + session_id + "'");
    if (slot->learner_id != *learner)
      return api_error(403, "FORBIDDEN", "session belongs to another learner");
    if (!body.is_object())
      return api_error(422, "MALFORMED_PAYLOAD", "body must be a JSON object");

    std::lock_guard lock(slot->mutex);
    auto& s = *slot->session;
    try {
      if (body.contains("responses")) {
        auto responses = int_map(body["responses"]);
        if (!responses) return malformed("responses");
        if (s.state() != StateKind::AwaitQuestionnaire) throw wrong_state(s, "questionnaire responses");
        s.submit_questionnaire(*responses);
        return {200, json{{"accepted", true},
                          {"profile", to_json(*s.model().style)},
                          {"trace", s.step()["trace"]},
                          {"next_state", to_string(s.state())}}};
      }
      if (body.contains("answers")) {
        auto answers = int_map(body["answers"]);
        if (!answers) return malformed("answers");
        if (s.state() != StateKind::AwaitPreTest && s.state() != StateKind::AwaitPostTest)
          throw wrong_state(s, "answers");
        auto outcome = s.submit_answers(*answers);
        return {200, to_json(outcome)};
      }
      if (body.contains("acknowledge")) {
        if (!body["acknowledge"].is_boolean() || !body["acknowledge"].get<bool>())
          return malformed("acknowledge");
        if (s.state() != StateKind::Presenting) throw wrong_state(s, "acknowledge");
        json step = s.advance();
        step["session_id"] = session_id;
        return {200, step};
      }
      return api_error(422, "MALFORMED_PAYLOAD",
                       "body needs one of \"responses\", \"answers\" or \"acknowledge\"");
    } catch (const Error& e) {
      return api_error(e);
    }
  }

  ApiResponse learner_model(std::string_view authorization, const std::string& learner_id) {
    auto learner = authenticate(authorization);
    if (!learner) return unauthorized();
    if (*learner != learner_id)
      return api_error(403, "FORBIDDEN", "token does not belong to learner '" + learner_id + "'");
    LearnerModel model;
    if (auto slot = slot_of_learner(learner_id)) {
      std::lock_guard lock(slot->mutex);
      model = slot->session->model();
    } else {
      try {
        model = store_.load(learner_id);
      } catch (const Error& e) {
        return api_error(e);
      }
    }
    return {200, model_summary(model)};
  }

  ApiResponse faq() const { return {200, faq_document()}; }

  json model_summary(const LearnerModel& m) const {
    json concepts = json::array();
    for (const auto& cid : kb_->curriculum_order()) {
      const auto& c = kb_->concept_at(cid);
      const auto* topic = kb_->topic_of(cid);
      json entry{{"concept_id", cid},
                 {"title", c.title},
                 {"topic_id", topic ? topic->id : ""},
                 {"attempted", false}};
      if (auto it = m.concept_knowledge.find(cid); it != m.concept_knowledge.end()) {
        entry["attempted"] = true;
        entry["last_score"] = it->second.last_score;
        entry["level"] = to_string(it->second.level);
        entry["attempts"] = it->second.attempts;
        entry["mastered"] = it->second.level >= kMasteryBar;
      }
      concepts.push_back(entry);
    }
    json topics = json::array();
    for (const auto& t : kb_->topics()) {
      const int score = aggregate_topic_knowledge(m, t);
      topics.push_back({{"topic_id", t.id},
                        {"title", t.title},
                        {"score", score},
                        {"level", to_string(classify_knowledge(score))}});
    }
    return {{"learner_id", m.learner_id},
            {"display_name", m.display_name},
            {"learner_level", to_string(m.level)},
            {"style", m.style ? to_json(*m.style) : json(nullptr)},
            {"concepts", concepts},
            {"topics", topics},
            {"questions_answered", m.asked_questions.size()},
            {"events_recorded", m.events.size()}};
  }

 private:
  struct Slot {
    std::string learner_id;
    std::mutex mutex;
    std::unique_ptr<Session> session;
  };

  struct TokenInfo {
    std::string learner_id;
    std::int64_t expires_at_ms = 0;
  };

  std::optional<std::string> authenticate(std::string_view header) {
    constexpr std::string_view prefix = "Bearer ";
    if (header.substr(0, prefix.size()) != prefix) return std::nullopt;
    const std::string token(header.substr(prefix.size()));
    std::lock_guard lock(token_mutex_);
    auto it = tokens_.find(token);
    if (it == tokens_.end()) return std::nullopt;
    if (it->second.expires_at_ms <= clock_()) {
      token_of_.erase(it->second.learner_id);
      tokens_.erase(it);
      return std::nullopt;
    }
    return it->second.learner_id;
  }

  static ApiResponse unauthorized() {
    return api_error(401, "UNAUTHORIZED", "missing, unknown or expired bearer token");
  }

  static ApiResponse malformed(const std::string& field) {
    return api_error(422, "MALFORMED_PAYLOAD",
                     "\"" + field + "\" must be an object of string keys to integers", field);
  }

  static Error wrong_state(const Session& s, const std::string& what) {
    return Error(ErrorCode::WrongState, what + " not accepted in state " +
                                            std::string(to_string(s.state())));
  }

  static std::optional<std::map<std::string, int>> int_map(const json& j) {
    if (!j.is_object()) return std::nullopt;
    std::map<std::string, int> out;
    for (const auto& [k, v] : j.items()) {
      if (!v.is_number_integer()) return std::nullopt;
      out[k] = v.get<int>();
    }
    return out;
  }

  std::shared_ptr<Slot> find_slot(const std::string& session_id) {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(session_id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::shared_ptr<Slot> slot_of_learner(const std::string& learner_id) {
    std::shared_lock lock(sessions_mutex_);
    auto it = session_of_.find(learner_id);
    if (it == session_of_.end()) return nullptr;
    return sessions_.at(it->second);
  }

  std::shared_ptr<const KnowledgeBase> kb_;
  PedagogyConfig pedagogy_;
  Questionnaire questionnaire_;
  ServiceConfig config_;
  Clock clock_;
  RecordStore store_;

  std::mutex register_mutex_;
  std::mutex token_mutex_;
  std::map<std::string, TokenInfo> tokens_;
  std::map<std::string, std::string> token_of_;

  std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::map<std::string, std::string> session_of_;
};

}  // namespace simtutor
