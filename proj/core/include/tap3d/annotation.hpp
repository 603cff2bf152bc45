#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tap3d/geometry.hpp"
#include "tap3d/trackset.hpp"

namespace tap3d {

/// Row-major raster. Pixel (col, row) is centered on image coordinate (col, row).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative image size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  ImageSize size() const { return {width_, height_}; }

  bool contains(int col, int row) const {
    return col >= 0 && row >= 0 && col < width_ && row < height_;
  }
  T& at(int col, int row) { return values_[index(col, row)]; }
  const T& at(int col, int row) const { return values_[index(col, row)]; }

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

/// z-depth in meters; any non-positive or non-finite value means "no depth".
using DepthMap = Image<double>;
/// Binary masks (nonzero = on mask) or integer segmentation labels.
using MaskMap = Image<std::int32_t>;

struct PixelIndex {
  int col = 0;
  int row = 0;
};

/// Nearest pixel to an image coordinate.
inline PixelIndex nearest_pixel(const Point2& p) {
  return {static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y()))};
}

inline bool in_image(const ImageSize& size, const Point2& p) {
  if (!p.allFinite()) return false;
  const PixelIndex px = nearest_pixel(p);
  return px.col >= 0 && px.row >= 0 && px.col < size.width && px.row < size.height;
}

enum class DepthSampling { Nearest, Bilinear };

std::optional<double> sample_depth(const DepthMap& depth, const Point2& p,
                                   DepthSampling sampling = DepthSampling::Nearest);
std::optional<std::int32_t> sample_mask(const MaskMap& mask, const Point2& p);

/// How close a point's depth must be to the observed depth to count as visible.
///
/// Two-sided rules test |z - D| < margin; one-sided rules only occlude points
/// lying behind the observed surface (z - D < margin).
struct MarginRule {
  enum class Kind { Absolute, Relative };

  Kind kind = Kind::Relative;
  double value = 0.05;  ///< meters for Absolute, fraction of D for Relative
  bool one_sided = false;

  static MarginRule absolute(double meters, bool one_sided = false);
  static MarginRule relative(double fraction, bool one_sided = false);

  bool consistent(double point_depth, double observed_depth) const;
};

/// ADT / PStudio: two-sided 5 % relative; DriveTrack: one-sided 5 % relative;
/// Synthetic: two-sided 1e-6 m absolute.
MarginRule default_margin(Source source);

/// Observed depth along the ray through an image coordinate at a frame.
/// nullopt means no valid depth there.
using DepthLookup = std::function<std::optional<double>(int frame, const Point2& pixel)>;

/// Visibility of one camera-frame trajectory against observed depth. Points
/// with z <= 0, off the image, without valid depth, or on the hand mask are
/// not visible. `hand_masks` is either empty or one mask per frame.
std::vector<std::uint8_t> compute_visibility(std::span<const Point3> track,
                                             const DepthLookup& depth, const ImageSize& image,
                                             const CameraIntrinsics& intrinsics,
                                             const MarginRule& margin,
                                             std::span<const MaskMap> hand_masks = {});

/// Raster version: one depth map per frame, sampled with `sampling`.
/// Throws DimensionMismatch on frame-count or raster-size disagreement.
std::vector<std::uint8_t> compute_visibility(std::span<const Point3> track,
                                             std::span<const DepthMap> depth,
                                             const CameraIntrinsics& intrinsics,
                                             const MarginRule& margin,
                                             std::span<const MaskMap> hand_masks = {},
                                             DepthSampling sampling = DepthSampling::Nearest);

/// Camera-frame point expressed in the object frame:
/// Q_obj = P(world->obj) * P(cam->world) * Q_cam.
Point3 fix_query_to_object(const Point3& query_camera, const Pose& world_to_camera,
                           const Pose& world_to_object);

/// Unprojects the query pixel with the depth map at the query frame, checks
/// the segmentation label, and fixes the point to the object. Throws
/// InvalidDepthAtQuery and ObjectIdMismatch.
Point3 fix_query_to_object(const Query& query, const DepthMap& depth, const MaskMap& segmentation,
                           int object_id, const Pose& world_to_camera, const Pose& world_to_object,
                           const CameraIntrinsics& intrinsics);

/// Q_cam(t) = P(world->cam)_t * P(obj->world)_t * Q_obj for every frame.
std::vector<Point3> derive_rigid_track(const Point3& query_object,
                                       std::span<const Pose> world_to_object,
                                       std::span<const Pose> world_to_camera);

struct GaussianTrack {
  std::size_t center_index = 0;
  Point2 snapped_query;
  std::vector<Point3> track;  ///< camera frame, one point per frame
};

/// Nearest moving center to the unprojected query (in the camera frame at the
/// query frame), the query snapped onto that center's projection, and the
/// center's camera-frame trajectory. `centers[t]` holds the world-frame
/// centers at frame t; every frame must hold the same number of centers.
GaussianTrack gaussian_nearest_track(const Query& query, const DepthMap& depth_at_query,
                                     std::span<const std::vector<Point3>> centers,
                                     std::span<const Pose> world_to_camera,
                                     const CameraIntrinsics& intrinsics);

/// Predicts the unprojected query point, at its ground-truth query-frame
/// depth, for every frame, with every frame predicted visible.
PredictionRecord static_baseline(const GroundTruthRecord& gt);

}  // namespace tap3d
