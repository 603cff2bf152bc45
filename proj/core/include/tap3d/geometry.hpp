#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tap3d {

using Point2 = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;

/// Which focal length turns a pixel radius into a metric radius when the
/// camera has non-square pixels.
enum class FocalRule {
  GeometricMean,  ///< sqrt(fx * fy)
  Horizontal,     ///< fx
  Vertical,       ///< fy
};

/// Pinhole intrinsics in pixels. Pixel centers sit on integer coordinates.
class CameraIntrinsics {
 public:
  CameraIntrinsics() = default;
  CameraIntrinsics(double fx, double fy, double cx, double cy);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  double focal_length(FocalRule rule = FocalRule::GeometricMean) const;
  Eigen::Matrix3d matrix() const;

  bool operator==(const CameraIntrinsics&) const = default;

 private:
  double fx_ = 1.0;
  double fy_ = 1.0;
  double cx_ = 0.0;
  double cy_ = 0.0;
};

/// Pinhole projection of a camera-frame point. Throws NonPositiveDepth for z <= 0.
Point2 project(const CameraIntrinsics& intrinsics, const Point3& p);

/// Same as project() but reports points on or behind the camera plane as
/// nullopt instead of throwing. Used on the evaluation side where
/// predictions may be arbitrary.
std::optional<Point2> try_project(const CameraIntrinsics& intrinsics, const Point3& p);

/// K^-1 (x, y, 1)^T * depth. The result has z == depth.
Point3 unproject(const CameraIntrinsics& intrinsics, const Point2& pixel, double depth);

/// Rigid transform in SE(3). Maps points from a source frame to a target
/// frame: p_target = rotation * p_source + translation.
class Pose {
 public:
  static constexpr double kTolerance = 1e-9;
  static constexpr double kRepairTolerance = 1e-6;

  Pose();
  /// Rotations off by at most kRepairTolerance are re-orthonormalized;
  /// anything worse throws InvalidPose.
  Pose(const Eigen::Matrix3d& rotation, const Point3& translation);

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Point3& t);
  static Pose from_axis_angle(const Point3& axis, double radians,
                              const Point3& translation = Point3::Zero());

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Point3 operator*(const Point3& p) const { return apply(p); }

  /// (*this) * other applies `other` first.
  Pose operator*(const Pose& other) const;
  Pose inverse() const;

 private:
  struct Trusted {};
  Pose(Trusted, const Eigen::Matrix3d& rotation, const Point3& translation)
      : rotation_(rotation), translation_(translation) {}

  Eigen::Matrix3d rotation_;
  Point3 translation_;
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose invert(const Pose& a) { return a.inverse(); }
inline Point3 apply(const Pose& a, const Point3& p) { return a.apply(p); }

/// Depth-adaptive correctness radius in meters: Z * delta_2d / f.
double delta3d_threshold(const CameraIntrinsics& intrinsics, const Point3& gt_point,
                         double delta_2d, FocalRule rule = FocalRule::GeometricMean);

}  // namespace tap3d
