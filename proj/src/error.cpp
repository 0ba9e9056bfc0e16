#include "semloc/error.hpp"

namespace semloc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kUnknownGroup: return "unknown-group";
    case ErrorCode::kMismatchedRounds: return "mismatched-rounds";
    case ErrorCode::kNoRoadCells: return "no-road-cells";
    case ErrorCode::kEmptyVisibleSet: return "empty-visible-set";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNonMovableObject: return "non-movable-object";
    case ErrorCode::kEmptyMatrix: return "empty-matrix";
    case ErrorCode::kDegenerateTrajectory: return "degenerate-trajectory";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace semloc
