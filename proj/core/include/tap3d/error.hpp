#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tap3d {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDepth,
  InvalidPose,
  AllDegenerate,
  DegenerateQueryPrediction,
  NoVisiblePoints,
  InvalidDepthAtQuery,
  ObjectIdMismatch,
  DimensionMismatch,
  DegenerateSpec,
  ParseError,
  BadMagic,
  BadHeader,
  UnsupportedDtype,
  UnsupportedLayout,
  TruncatedData,
  ShapeMismatch,
  ValidationFailed,
  IoFailure,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is the
/// machine-readable part; the message names the offending field or index.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tap3d
