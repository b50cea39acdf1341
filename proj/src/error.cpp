#include "freechunk/error.hpp"

namespace freechunk {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kNoGranularities: return "NoGranularities";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kEmptyPattern: return "EmptyPattern";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kAllMaskedRow: return "AllMaskedRow";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kNotUnitNorm: return "NotUnitNorm";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kRemoteRejected: return "RemoteRejected";
    case ErrorCode::kRemoteUnavailable: return "RemoteUnavailable";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace freechunk
