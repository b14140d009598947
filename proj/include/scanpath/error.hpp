#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scanpath {

enum class ErrorCode {
  DegenerateRect,
  NoViewport,
  InvalidLayout,
  InvalidSegment,
  SegmentOverlap,
  InvalidConfig,
  EmptyLayout,
  EmptyWindow,
  ZeroDuration,
  NoDirectionalSaccades,
  LayoutTooSmall,
  BadWindowSize,
  SingleClass,
  EmptyValidation,
  ShapeMismatch,
  TooFewFixations,
  EmptySample,
  ZeroVariance,
  SingularCovariance,
  LengthMismatch,
  DegenerateMarginals,
  DomainError,
  TooFewParticipants,
  EmptyMatrix,
  Leakage,
  ParseError,
  SchemaMismatch,
  NotFound,
  Forbidden,
  Conflict,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
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

}  // namespace scanpath
