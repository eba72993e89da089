#include "tnvault/errors.hpp"

namespace tnvault {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidPermutation: return "InvalidPermutation";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kInvalidThreshold: return "InvalidThreshold";
    case ErrorCode::kRankTooLarge: return "RankTooLarge";
    case ErrorCode::kRankSplitFailure: return "RankSplitFailure";
    case ErrorCode::kInvalidTree: return "InvalidTree";
    case ErrorCode::kTooFewServers: return "TooFewServers";
    case ErrorCode::kSeedCountMismatch: return "SeedCountMismatch";
    case ErrorCode::kMissingFragment: return "MissingFragment";
    case ErrorCode::kHashMismatch: return "HashMismatch";
    case ErrorCode::kTransportUnavailable: return "TransportUnavailable";
    case ErrorCode::kUnknownServer: return "UnknownServer";
    case ErrorCode::kMisalignedShares: return "MisalignedShares";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kNodeFailure: return "NodeFailure";
    case ErrorCode::kZeroNormOriginal: return "ZeroNormOriginal";
    case ErrorCode::kDegenerateRange: return "DegenerateRange";
    case ErrorCode::kUnknownSuite: return "UnknownSuite";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

std::optional<ErrorCode> error_from_name(std::string_view name) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::kIoError); ++c) {
    const auto code = static_cast<ErrorCode>(c);
    if (error_name(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace tnvault
