#pragma once

#include <stdexcept>
#include <string>

namespace vprobe {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfBounds,
  kUnknownGlyph,
  kNonDivisibleFactor,
  kRectOutOfBounds,
  kNonDivisibleMerge,
  kTextLargerThanCell,
  kTextLargerThanCrop,
  kNotCut,
  kPlacementFailure,
  kEmptyTruth,
  kNoBoxes,
  kTooFewRecords,
  kValidation,
  kIo,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers (and the CLI
// exit-code mapping) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vprobe
