#pragma once

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace annoteval {

enum class ErrorCode {
  DuplicateCode,
  MalformedNode,
  MalformedTree,
  UnknownLabel,
  InvalidSpan,
  DuplicateError,
  EmptyCorpus,
  InvalidSentenceIndex,
  InsufficientData,
  DomainError,
  ParseFailure,
  AuthError,
  ProviderUnavailable,
  NotFound,
  IntegrityError,
  DocSetMismatch,
  BadFormat,
  IoError,
  UsageError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::DuplicateCode: return "DuplicateCode";
    case ErrorCode::MalformedNode: return "MalformedNode";
    case ErrorCode::MalformedTree: return "MalformedTree";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::InvalidSpan: return "InvalidSpan";
    case ErrorCode::DuplicateError: return "DuplicateError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidSentenceIndex: return "InvalidSentenceIndex";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::DocSetMismatch: return "DocSetMismatch";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// Library-wide exception. Carries a code plus key=value detail fields so the
/// CLI can emit one machine-parseable diagnostic line per failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

  Error& with(std::string_view key, std::string_view value) {
    fields_[std::string(key)] = std::string(value);
    return *this;
  }
  Error& with(std::string_view key, long long value) {
    return with(key, std::to_string(value));
  }

  const std::map<std::string, std::string>& fields() const { return fields_; }

  /// One-line diagnostic: code=UnknownLabel doc=... msg="..."
  std::string diagnostic() const {
    std::ostringstream os;
    os << "code=" << error_code_name(code_);
    for (const auto& [k, v] : fields_) os << ' ' << k << '=' << v;
    os << " msg=\"" << what() << '"';
    return os.str();
  }

 private:
  ErrorCode code_;
  std::map<std::string, std::string> fields_;
};

}  // namespace annoteval
