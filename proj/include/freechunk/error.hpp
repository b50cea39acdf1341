#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freechunk {

enum class ErrorCode {
  kEmptyDocument,
  kNoGranularities,
  kIndexOutOfRange,
  kEmptyPattern,
  kShapeMismatch,
  kAllMaskedRow,
  kNonFiniteInput,
  kZeroVector,
  kNonFiniteGradient,
  kNotUnitNorm,
  kEmptyBatch,
  kRemoteRejected,
  kRemoteUnavailable,
  kMalformedResponse,
  kEmptyIndex,
  kParseError,
  kConfigError,
  kIoError,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library is an Error carrying a code the CLI
// maps onto its exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix, for re-throwing with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace freechunk
