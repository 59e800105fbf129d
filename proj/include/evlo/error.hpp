#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evlo {

enum class ErrorCode {
  kInvalidArgument,
  kGimbalLock,
  kTooFewPoints,
  kDimensionMismatch,
  kNumericalUnderflow,
  kDegenerateGeometry,
  kNonFiniteLoss,
  kMisalignedInputs,
  kSingularSystem,
  kEmptyOverlap,
  kParseError,
  kNonRigid,
  kTruncatedRecord,
  kIoError,
};

std::string_view error_name(ErrorCode code);

// Every failure raised by the library carries a code; the CLI prints the
// code name so scripts can tell failure kinds apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace evlo
