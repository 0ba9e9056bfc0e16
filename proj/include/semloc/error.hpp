#pragma once

#include <stdexcept>
#include <string>

namespace semloc {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kIo,
  kDuplicateId,
  kUnknownGroup,
  kMismatchedRounds,
  kNoRoadCells,
  kEmptyVisibleSet,
  kDivergence,
  kNonFinite,
  kLengthMismatch,
  kDimensionMismatch,
  kNonMovableObject,
  kEmptyMatrix,
  kDegenerateTrajectory,
  kConfig,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this exception; `code()` lets
// callers (the CLI in particular) map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace semloc
