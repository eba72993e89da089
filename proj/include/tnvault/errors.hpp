#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tnvault {

enum class ErrorCode {
  kShapeMismatch,
  kIndexOutOfRange,
  kInvalidPermutation,
  kInvalidArgument,
  kNumericalFailure,
  kInvalidThreshold,
  kRankTooLarge,
  kRankSplitFailure,
  kInvalidTree,
  kTooFewServers,
  kSeedCountMismatch,
  kMissingFragment,
  kHashMismatch,
  kTransportUnavailable,
  kUnknownServer,
  kMisalignedShares,
  kProtocolViolation,
  kNodeFailure,
  kZeroNormOriginal,
  kDegenerateRange,
  kUnknownSuite,
  kFormatError,
  kIoError,
};

std::string_view error_name(ErrorCode code);
std::optional<ErrorCode> error_from_name(std::string_view name);

// Single exception type for the library. The code carries the error class,
// the message carries the detail (offending shape, fragment id, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace tnvault
