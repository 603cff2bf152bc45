#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tap3d/error.hpp"
#include "tap3d/geometry.hpp"

namespace tap3d {

enum class Source { ADT, DriveTrack, PStudio, Synthetic };

std::string_view to_string(Source source);
std::optional<Source> parse_source(std::string_view name);

/// Storage precision of a floating-point field on disk. Computation is
/// always done in double.
enum class FloatStorage { Float32, Float64 };

struct ImageSize {
  int width = 0;
  int height = 0;
  bool operator==(const ImageSize&) const = default;
};

/// Dense per-(track, frame) grid stored track-major, so a whole trajectory
/// is contiguous.
template <typename T>
class TrackGrid {
 public:
  TrackGrid() = default;
  TrackGrid(int num_tracks, int num_frames, const T& fill = T{})
      : tracks_(num_tracks), frames_(num_frames),
        values_(static_cast<std::size_t>(num_tracks) * static_cast<std::size_t>(num_frames), fill) {
    if (num_tracks < 0 || num_frames < 0) {
      throw Error(ErrorCode::InvalidArgument, "negative grid dimension");
    }
  }

  int num_tracks() const { return tracks_; }
  int num_frames() const { return frames_; }
  bool empty() const { return values_.empty(); }

  T& at(int track, int frame) { return values_[index(track, frame)]; }
  const T& at(int track, int frame) const { return values_[index(track, frame)]; }

  std::span<T> track(int i) {
    return {values_.data() + index(i, 0), static_cast<std::size_t>(frames_)};
  }
  std::span<const T> track(int i) const {
    return {values_.data() + index(i, 0), static_cast<std::size_t>(frames_)};
  }

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  bool same_shape(int num_tracks, int num_frames) const {
    return tracks_ == num_tracks && frames_ == num_frames;
  }

  bool operator==(const TrackGrid&) const = default;

 private:
  std::size_t index(int track, int frame) const {
    return static_cast<std::size_t>(track) * static_cast<std::size_t>(frames_) +
           static_cast<std::size_t>(frame);
  }

  int tracks_ = 0;
  int frames_ = 0;
  std::vector<T> values_;
};

using TrackArray = TrackGrid<Point3>;
using VisibilityArray = TrackGrid<std::uint8_t>;

/// Query point: pixel position and the frame it was sampled at.
struct Query {
  double x = 0.0;
  double y = 0.0;
  int frame = 0;

  Point2 pixel() const { return {x, y}; }
  bool operator==(const Query&) const = default;
};

struct FieldStorage {
  FloatStorage tracks = FloatStorage::Float64;
  FloatStorage queries = FloatStorage::Float64;
  FloatStorage intrinsics = FloatStorage::Float64;
  bool operator==(const FieldStorage&) const = default;
};

struct GroundTruthRecord {
  std::string video_id;
  Source source = Source::Synthetic;
  double fps = 30.0;
  CameraIntrinsics intrinsics;
  std::optional<ImageSize> image_size;
  TrackArray tracks;
  VisibilityArray visibility;
  std::vector<Query> queries;
  FieldStorage storage;

  int num_tracks() const { return tracks.num_tracks(); }
  int num_frames() const { return tracks.num_frames(); }

  /// Declared raster size, or (2 cx, 2 cy) when the record does not carry one.
  ImageSize raster_size() const;

  bool operator==(const GroundTruthRecord&) const = default;
};

struct PredictionRecord {
  TrackArray tracks;
  VisibilityArray visibility;
  FloatStorage storage = FloatStorage::Float64;

  int num_tracks() const { return tracks.num_tracks(); }
  int num_frames() const { return tracks.num_frames(); }

  bool operator==(const PredictionRecord&) const = default;
};

struct Violation {
  enum class Rule {
    TooFewFrames,
    NoTracks,
    ShapeMismatch,
    NonFinite,
    NonFiniteQuery,
    QueryFrameOutOfRange,
    QueryNotVisible,
    VisibleBehindCamera,
    InvalidFps,
  };

  Rule rule;
  int track = -1;  ///< -1 when the violation is not tied to a track
  int frame = -1;  ///< -1 when the violation is not tied to a frame

  std::string describe() const;
  bool operator==(const Violation&) const = default;
};

std::string_view to_string(Violation::Rule rule);

/// Lists every broken invariant; an empty result means the record is valid.
std::vector<Violation> validate(const GroundTruthRecord& record);

/// Shape compatibility with the ground truth and finiteness of positions.
std::vector<Violation> validate(const PredictionRecord& prediction,
                                const GroundTruthRecord& reference);

/// Throws ValidationFailed carrying the described violations.
void require_valid(const GroundTruthRecord& record);

struct TrackSet2D {
  TrackGrid<Point2> xy;
  VisibilityArray visibility;
  /// 0 where the point was on or behind the camera plane and no pixel exists.
  VisibilityArray projected;

  int num_tracks() const { return xy.num_tracks(); }
  int num_frames() const { return xy.num_frames(); }
};

TrackSet2D to_2d(const TrackArray& tracks, const VisibilityArray& visibility,
                 const CameraIntrinsics& intrinsics);
TrackSet2D to_2d(const GroundTruthRecord& record);
TrackSet2D to_2d(const PredictionRecord& prediction, const CameraIntrinsics& intrinsics);

}  // namespace tap3d
