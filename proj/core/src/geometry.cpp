#include "tap3d/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "tap3d/error.hpp"

namespace tap3d {

namespace {

bool finite(double v) { return std::isfinite(v); }

double orthonormality_error(const Eigen::Matrix3d& r) {
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = std::abs(r.determinant() - 1.0);
  return std::max(ortho, det);
}

}  // namespace

CameraIntrinsics::CameraIntrinsics(double fx, double fy, double cx, double cy)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
  if (!finite(fx) || !finite(fy) || !finite(cx) || !finite(cy)) {
    throw Error(ErrorCode::InvalidArgument, "camera intrinsics must be finite");
  }
  if (fx <= 0.0 || fy <= 0.0) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
}

double CameraIntrinsics::focal_length(FocalRule rule) const {
  switch (rule) {
    case FocalRule::Horizontal: return fx_;
    case FocalRule::Vertical: return fy_;
    case FocalRule::GeometricMean: break;
  }
  return fx_ == fy_ ? fx_ : std::sqrt(fx_ * fy_);
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx_, 0.0, cx_, 0.0, fy_, cy_, 0.0, 0.0, 1.0;
  return k;
}

Point2 project(const CameraIntrinsics& intrinsics, const Point3& p) {
  if (!(p.z() > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth,
                "cannot project point with z = " + std::to_string(p.z()));
  }
  return {intrinsics.fx() * p.x() / p.z() + intrinsics.cx(),
          intrinsics.fy() * p.y() / p.z() + intrinsics.cy()};
}

std::optional<Point2> try_project(const CameraIntrinsics& intrinsics, const Point3& p) {
  if (!(p.z() > 0.0)) return std::nullopt;
  return Point2{intrinsics.fx() * p.x() / p.z() + intrinsics.cx(),
                intrinsics.fy() * p.y() / p.z() + intrinsics.cy()};
}

Point3 unproject(const CameraIntrinsics& intrinsics, const Point2& pixel, double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth,
                "cannot unproject with depth = " + std::to_string(depth));
  }
  return {(pixel.x() - intrinsics.cx()) / intrinsics.fx() * depth,
          (pixel.y() - intrinsics.cy()) / intrinsics.fy() * depth, depth};
}

Pose::Pose() : rotation_(Eigen::Matrix3d::Identity()), translation_(Point3::Zero()) {}

Pose::Pose(const Eigen::Matrix3d& rotation, const Point3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::InvalidPose, "pose contains non-finite values");
  }
  const double err = orthonormality_error(rotation);
  if (err <= kTolerance) return;
  if (err > kRepairTolerance) {
    throw Error(ErrorCode::InvalidPose,
                "rotation is not orthonormal (error " + std::to_string(err) + ")");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  rotation_ = svd.matrixU() * svd.matrixV().transpose();
}

Pose Pose::from_translation(const Point3& t) {
  return Pose(Eigen::Matrix3d::Identity(), t);
}

Pose Pose::from_axis_angle(const Point3& axis, double radians, const Point3& translation) {
  if (!(axis.norm() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "rotation axis must be non-zero");
  }
  return Pose(Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix(), translation);
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(Trusted{}, rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return Pose(Trusted{}, rt, -(rt * translation_));
}

double delta3d_threshold(const CameraIntrinsics& intrinsics, const Point3& gt_point,
                         double delta_2d, FocalRule rule) {
  if (!(gt_point.z() > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth, "threshold needs a point in front of the camera");
  }
  if (!(delta_2d > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "pixel threshold must be positive");
  }
  return gt_point.z() * delta_2d / intrinsics.focal_length(rule);
}

}  // namespace tap3d
