#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace causaloid {

enum class ErrorCode {
  InvalidArgument,
  ZeroConditionCount,
  BackendError,
  UnknownRegion,
  DimensionMismatch,
  TableTooLarge,
  SpanDeficient,
  IncompleteTable,
  DegenerateExterior,
  ResidualTooLarge,
  UnknownLabel,
  UnknownExterior,
  ContextMismatch,
  SingularTransform,
  MissingEntry,
  RuleInapplicable,
  UnknownProcedure,
  ZeroDenominatorVector,
  ZeroDenominator,
  SchemaError,
  IoError,
  UnknownEntry,
};

std::string_view to_string(ErrorCode code);

// True for failures of the numerical pipeline (residual, singular, span);
// the CLI maps these to exit status 3.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace causaloid
