#pragma once

#include <stdexcept>
#include <string>

namespace npacert {

enum class ErrorKind {
  InvalidArgument,
  ScenarioMismatch,
  MissingMoment,
  RangeError,
  DuplicateMoment,
  SchemaError,
  NoBracket,
  Numerical,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ScenarioMismatch: return "ScenarioMismatch";
    case ErrorKind::MissingMoment: return "MissingMoment";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::DuplicateMoment: return "DuplicateMoment";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::Numerical: return "Numerical";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Same kind, message prefixed with the pipeline stage that raised it.
  Error with_stage(const std::string& stage) const {
    return Error(kind_, stage + ": " + what());
  }

 private:
  ErrorKind kind_;
};

}  // namespace npacert
