#include "vprobe/error.hpp"

namespace vprobe {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kUnknownGlyph: return "UnknownGlyph";
    case ErrorCode::kNonDivisibleFactor: return "NonDivisibleFactor";
    case ErrorCode::kRectOutOfBounds: return "RectOutOfBounds";
    case ErrorCode::kNonDivisibleMerge: return "NonDivisibleMerge";
    case ErrorCode::kTextLargerThanCell: return "TextLargerThanCell";
    case ErrorCode::kTextLargerThanCrop: return "TextLargerThanCrop";
    case ErrorCode::kNotCut: return "NotCut";
    case ErrorCode::kPlacementFailure: return "PlacementFailure";
    case ErrorCode::kEmptyTruth: return "EmptyTruth";
    case ErrorCode::kNoBoxes: return "NoBoxes";
    case ErrorCode::kTooFewRecords: return "TooFewRecords";
    case ErrorCode::kValidation: return "Validation";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace vprobe
