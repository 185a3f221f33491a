#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace simtutor {

enum class ErrorCode {
  Parse,
  Validation,
  Config,
  MissingResponse,
  OutOfRangeResponse,
  UnknownItem,
  OutOfRange,
  UnknownConcept,
  NotFound,
  Storage,
  InsufficientBank,
  NoAsset,
  WrongState,
  MissingAnswer,
  UnknownQuestion,
  InvalidAnswer,
};

// Stable machine codes; these strings are part of the HTTP contract.
constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "PARSE_ERROR";
    case ErrorCode::Validation: return "VALIDATION_ERROR";
    case ErrorCode::Config: return "CONFIG_ERROR";
    case ErrorCode::MissingResponse: return "MISSING_RESPONSE";
    case ErrorCode::OutOfRangeResponse: return "OUT_OF_RANGE_RESPONSE";
    case ErrorCode::UnknownItem: return "UNKNOWN_ITEM";
    case ErrorCode::OutOfRange: return "OUT_OF_RANGE";
    case ErrorCode::UnknownConcept: return "UNKNOWN_CONCEPT";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::Storage: return "STORAGE_ERROR";
    case ErrorCode::InsufficientBank: return "INSUFFICIENT_BANK";
    case ErrorCode::NoAsset: return "NO_ASSET";
    case ErrorCode::WrongState: return "WRONG_STATE";
    case ErrorCode::MissingAnswer: return "MISSING_ANSWER";
    case ErrorCode::UnknownQuestion: return "UNKNOWN_QUESTION";
    case ErrorCode::InvalidAnswer: return "INVALID_ANSWER";
  }
  return "INTERNAL";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  // Optional locator: a JSON path, a concept id, an item id.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

struct Violation {
  std::string path;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(ErrorCode::Validation, summarize(violations),
              violations.empty() ? std::string{} : violations.front().path),
        violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  static std::string summarize(const std::vector<Violation>& violations) {
    std::string out = std::to_string(violations.size()) + " validation error(s)";
    for (const auto& v : violations) out += "\n  " + v.path + ": " + v.message;
    return out;
  }

  std::vector<Violation> violations_;
};

}  // namespace simtutor
