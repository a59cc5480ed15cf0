#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rwlime {

enum class ErrorCode {
  EmptyInput,
  LengthMismatch,
  OddDimension,
  EmptySpan,
  EmptySet,
  DimensionMismatch,
  AllMasked,
  BackendUnavailable,
  MalformedResponse,
  Unauthorized,
  EmptyGeneration,
  NotNormalized,
  InvalidConfig,
  DegenerateLOO,
  BudgetExceedsSpace,
  SingularSystem,
  KTooLarge,
  EmptyGold,
  DegenerateLabels,
  EmptyList,
  ParseError,
  MissingField,
  IndexOutOfRange,
  InvalidParams,
  IdMismatch,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix, for re-wrapping with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace rwlime
