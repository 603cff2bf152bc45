#include "tap3d/error.hpp"

namespace tap3d {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::InvalidPose: return "InvalidPose";
    case ErrorCode::AllDegenerate: return "AllDegenerate";
    case ErrorCode::DegenerateQueryPrediction: return "DegenerateQueryPrediction";
    case ErrorCode::NoVisiblePoints: return "NoVisiblePoints";
    case ErrorCode::InvalidDepthAtQuery: return "InvalidDepthAtQuery";
    case ErrorCode::ObjectIdMismatch: return "ObjectIdMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateSpec: return "DegenerateSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::UnsupportedLayout: return "UnsupportedLayout";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace tap3d
