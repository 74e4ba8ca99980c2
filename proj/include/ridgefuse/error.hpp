#pragma once

#include <stdexcept>
#include <string>

namespace ridgefuse {

enum class ErrorCode {
  InvalidInput,
  PositiveDefiniteRequired,
  EigenNotConverged,
  NotConverged,
  DegenerateVariable,
  MissingClass,
  InsufficientClassSize,
  TuningFailed,
  SingularEstimate,
  EmptyComponent,
  NumericalUnderflow,
  DimensionMismatch,
  ParseError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library. The code is what
/// callers branch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace ridgefuse
