#include "tap3d/trackset.hpp"

#include <algorithm>
#include <cmath>

namespace tap3d {

std::string_view to_string(Source source) {
  switch (source) {
    case Source::ADT: return "ADT";
    case Source::DriveTrack: return "DriveTrack";
    case Source::PStudio: return "PStudio";
    case Source::Synthetic: return "Synthetic";
  }
  return "Synthetic";
}

std::optional<Source> parse_source(std::string_view name) {
  if (name == "ADT" || name == "adt" || name == "aria") return Source::ADT;
  if (name == "DriveTrack" || name == "drivetrack") return Source::DriveTrack;
  if (name == "PStudio" || name == "pstudio") return Source::PStudio;
  if (name == "Synthetic" || name == "synthetic") return Source::Synthetic;
  return std::nullopt;
}

ImageSize GroundTruthRecord::raster_size() const {
  if (image_size) return *image_size;
  return {static_cast<int>(std::lround(2.0 * intrinsics.cx())),
          static_cast<int>(std::lround(2.0 * intrinsics.cy()))};
}

std::string_view to_string(Violation::Rule rule) {
  using R = Violation::Rule;
  switch (rule) {
    case R::TooFewFrames: return "TooFewFrames";
    case R::NoTracks: return "NoTracks";
    case R::ShapeMismatch: return "ShapeMismatch";
    case R::NonFinite: return "NonFinite";
    case R::NonFiniteQuery: return "NonFiniteQuery";
    case R::QueryFrameOutOfRange: return "QueryFrameOutOfRange";
    case R::QueryNotVisible: return "QueryNotVisible";
    case R::VisibleBehindCamera: return "VisibleBehindCamera";
    case R::InvalidFps: return "InvalidFps";
  }
  return "Unknown";
}

std::string Violation::describe() const {
  std::string out(to_string(rule));
  if (track >= 0) out += " track=" + std::to_string(track);
  if (frame >= 0) out += " frame=" + std::to_string(frame);
  return out;
}

std::vector<Violation> validate(const GroundTruthRecord& record) {
  using R = Violation::Rule;
  std::vector<Violation> out;
  const int q = record.num_tracks();
  const int t = record.num_frames();

  if (t < 2) out.push_back({R::TooFewFrames});
  if (q < 1) out.push_back({R::NoTracks});
  if (!(record.fps > 0.0) || !std::isfinite(record.fps)) out.push_back({R::InvalidFps});
  if (!record.visibility.same_shape(q, t) || static_cast<int>(record.queries.size()) != q) {
    out.push_back({R::ShapeMismatch});
    return out;
  }

  for (int i = 0; i < q; ++i) {
    for (int f = 0; f < t; ++f) {
      const Point3& p = record.tracks.at(i, f);
      if (!p.allFinite()) {
        out.push_back({R::NonFinite, i, f});
      } else if (record.visibility.at(i, f) && !(p.z() > 0.0)) {
        out.push_back({R::VisibleBehindCamera, i, f});
      }
    }
    const Query& query = record.queries[static_cast<std::size_t>(i)];
    if (!std::isfinite(query.x) || !std::isfinite(query.y)) {
      out.push_back({R::NonFiniteQuery, i});
    }
    if (query.frame < 0 || query.frame >= t) {
      out.push_back({R::QueryFrameOutOfRange, i, query.frame});
    } else if (!record.visibility.at(i, query.frame)) {
      out.push_back({R::QueryNotVisible, i, query.frame});
    }
  }
  return out;
}

std::vector<Violation> validate(const PredictionRecord& prediction,
                                const GroundTruthRecord& reference) {
  using R = Violation::Rule;
  std::vector<Violation> out;
  const int q = reference.num_tracks();
  const int t = reference.num_frames();
  if (!prediction.tracks.same_shape(q, t) || !prediction.visibility.same_shape(q, t)) {
    out.push_back({R::ShapeMismatch});
    return out;
  }
  for (int i = 0; i < q; ++i) {
    for (int f = 0; f < t; ++f) {
      if (!prediction.tracks.at(i, f).allFinite()) out.push_back({R::NonFinite, i, f});
    }
  }
  return out;
}

void require_valid(const GroundTruthRecord& record) {
  const auto violations = validate(record);
  if (violations.empty()) return;
  std::string message = "record '" + record.video_id + "' has " +
                        std::to_string(violations.size()) + " violation(s):";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 8);
  for (std::size_t k = 0; k < shown; ++k) message += " [" + violations[k].describe() + "]";
  if (shown < violations.size()) message += " ...";
  throw Error(ErrorCode::ValidationFailed, message);
}

TrackSet2D to_2d(const TrackArray& tracks, const VisibilityArray& visibility,
                 const CameraIntrinsics& intrinsics) {
  const int q = tracks.num_tracks();
  const int t = tracks.num_frames();
  if (!visibility.same_shape(q, t)) {
    throw Error(ErrorCode::DimensionMismatch, "visibility shape differs from tracks");
  }
  TrackSet2D out{TrackGrid<Point2>(q, t, Point2::Zero()), visibility, VisibilityArray(q, t, 0)};
  for (int i = 0; i < q; ++i) {
    for (int f = 0; f < t; ++f) {
      if (auto px = try_project(intrinsics, tracks.at(i, f))) {
        out.xy.at(i, f) = *px;
        out.projected.at(i, f) = 1;
      }
    }
  }
  return out;
}

TrackSet2D to_2d(const GroundTruthRecord& record) {
  return to_2d(record.tracks, record.visibility, record.intrinsics);
}

TrackSet2D to_2d(const PredictionRecord& prediction, const CameraIntrinsics& intrinsics) {
  return to_2d(prediction.tracks, prediction.visibility, intrinsics);
}

}  // namespace tap3d
