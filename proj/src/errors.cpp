#include "trl/errors.hpp"

namespace trl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kStepAfterTerminal: return "StepAfterTerminal";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteUpdate: return "NonFiniteUpdate";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kEmptyBuffer: return "EmptyBuffer";
    case ErrorCode::kDivisionByZero: return "DivisionByZero";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kBadCheckpoint: return "BadCheckpoint";
    case ErrorCode::kIllegalTransition: return "IllegalTransition";
    case ErrorCode::kBindFailure: return "BindFailure";
  }
  return "Unknown";
}

}  // namespace trl
