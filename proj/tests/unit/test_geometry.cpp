#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tap3d/error.hpp"
#include "tap3d/geometry.hpp"

using namespace tap3d;

TEST_SUITE("geometry") {
  TEST_CASE("project matches the pinhole formula") {
    const CameraIntrinsics k(100, 100, 0, 0);
    const Point2 p = project(k, {1, 2, 4});
    CHECK(p.x() == 25.0);
    CHECK(p.y() == 50.0);

    const CameraIntrinsics c(500, 500, 320, 240);
    for (double z : {0.1, 1.0, 250.0}) CHECK(project(c, {0, 0, z}) == Point2(320, 240));

    // u = 100 * 0.5 + 10, v = 200 * 0.5 + 20
    CHECK(project(CameraIntrinsics(100, 200, 10, 20), {1, 1, 2}) == Point2(60, 120));
  }

  TEST_CASE("project rejects points on or behind the camera plane") {
    const CameraIntrinsics k(100, 100, 0, 0);
    CHECK_THROWS_AS(project(k, {0, 0, 0}), Error);
    try {
      project(k, {1, 1, -2});
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonPositiveDepth);
    }
    CHECK_FALSE(try_project(k, {1, 1, -2}).has_value());
    CHECK(try_project(k, {1, 1, 2}).has_value());
  }

  TEST_CASE("unproject inverts project") {
    CHECK(unproject(CameraIntrinsics(100, 100, 0, 0), {25, 50}, 4) == Point3(1, 2, 4));
    CHECK(unproject(CameraIntrinsics(500, 400, 320, 240), {320, 240}, 7) == Point3(0, 0, 7));
    CHECK(unproject(CameraIntrinsics(100, 200, 10, 20), {60, 120}, 2) == Point3(1, 1, 2));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3, 3), z(0.2, 50);
    const CameraIntrinsics k(613.5, 601.25, 319.5, 239.5);
    for (int n = 0; n < 1000; ++n) {
      const Point3 p(u(rng), u(rng), z(rng));
      const Point3 back = unproject(k, project(k, p), p.z());
      CHECK((back - p).norm() < 1e-12 * (1 + p.norm()));
    }
  }

  TEST_CASE("intrinsics are validated") {
    CHECK_THROWS_AS(CameraIntrinsics(0, 1, 0, 0), Error);
    CHECK_THROWS_AS(CameraIntrinsics(1, -1, 0, 0), Error);
    CHECK_THROWS_AS(CameraIntrinsics(1, 1, NAN, 0), Error);
  }

  TEST_CASE("pose composition and inversion") {
    CHECK(invert(Pose::identity()).rotation() == Eigen::Matrix3d::Identity());
    CHECK(invert(Pose::identity()).translation() == Point3::Zero());

    const Pose a = Pose::from_translation({1, 0, 0});
    const Pose b = Pose::from_translation({0, 2, 0});
    CHECK(apply(compose(a, b), Point3::Zero()) == Point3(1, 2, 0));

    const Pose r = Pose::from_axis_angle(Point3::UnitY(), std::numbers::pi / 2);
    const Point3 p = r * Point3(1, 0, 0);
    // Reference matrix for a right-handed rotation about y.
    Eigen::Matrix3d ry;
    ry << 0, 0, 1, 0, 1, 0, -1, 0, 0;
    CHECK((p - ry * Point3(1, 0, 0)).norm() < 1e-15);
    CHECK((p - Point3(0, 0, -1)).norm() < 1e-15);
  }

  TEST_CASE("pose inverse is a two-sided identity") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int n = 0; n < 200; ++n) {
      const Pose a = Pose::from_axis_angle(Point3(u(rng), u(rng), u(rng)), 3 * u(rng),
                                           Point3(u(rng), u(rng), u(rng)) * 10);
      const Pose b = Pose::from_axis_angle(Point3(u(rng), u(rng), u(rng)), 3 * u(rng));
      const Point3 x(u(rng), u(rng), u(rng));
      CHECK(((a * a.inverse()) * x - x).norm() < 1e-12);
      CHECK(((a.inverse() * a) * x - x).norm() < 1e-12);
      // (a b)^-1 = b^-1 a^-1
      CHECK(((a * b).inverse() * x - (b.inverse() * a.inverse()) * x).norm() < 1e-12);
    }
  }

  TEST_CASE("nearly orthonormal rotations are repaired, others rejected") {
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    r(0, 1) = 1e-7;
    const Pose repaired(r, Point3::Zero());
    CHECK((repaired.rotation().transpose() * repaired.rotation() - Eigen::Matrix3d::Identity()).norm() < 1e-12);

    r(0, 1) = 1e-3;
    try {
      Pose bad(r, Point3::Zero());
      FAIL("expected InvalidPose");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidPose);
    }
    Eigen::Matrix3d mirror = Eigen::Matrix3d::Identity();
    mirror(2, 2) = -1;
    CHECK_THROWS_AS(Pose(mirror, Point3::Zero()), Error);
  }

  TEST_CASE("depth-adaptive radius") {
    CHECK(delta3d_threshold(CameraIntrinsics(512, 512, 0, 0), {0, 0, 4}, 8) == 0.0625);
    CHECK(delta3d_threshold(CameraIntrinsics(512, 512, 0, 0), {0, 0, 2}, 1) == 0.00390625);
    // sqrt(256 * 1024) = 512
    CHECK(delta3d_threshold(CameraIntrinsics(256, 1024, 0, 0), {0, 0, 4}, 8) == 0.0625);
    CHECK(delta3d_threshold(CameraIntrinsics(256, 1024, 0, 0), {0, 0, 4}, 8, FocalRule::Horizontal) == 0.125);
    CHECK(delta3d_threshold(CameraIntrinsics(256, 1024, 0, 0), {0, 0, 4}, 8, FocalRule::Vertical) == 0.03125);
  }
}
