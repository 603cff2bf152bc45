#include <doctest.h>

#include <numbers>
#include <random>

#include "support/helpers.hpp"
#include "tap3d/error.hpp"
#include "tap3d/annotation.hpp"
#include "tap3d/metrics.hpp"

using namespace tap3d;

namespace {

const CameraIntrinsics kCam(100, 100, 32, 24);

DepthMap flat_depth(double d) { return DepthMap(64, 48, d); }

std::vector<std::uint8_t> visibility_of(const Point3& p, double map_depth, const MarginRule& margin,
                                        std::vector<MaskMap> hands = {}) {
  const std::vector<Point3> track = {p};
  const std::vector<DepthMap> depth = {flat_depth(map_depth)};
  return compute_visibility(track, depth, kCam, margin, hands);
}

}  // namespace

TEST_SUITE("annotation") {
  TEST_CASE("fixing a query with identity poses is plain unprojection") {
    const Point3 q = unproject(kCam, {40, 20}, 3.0);
    CHECK(fix_query_to_object(q, Pose::identity(), Pose::identity()) == q);

    DepthMap depth = flat_depth(3.0);
    MaskMap seg(64, 48, 7);
    const Point3 fixed = fix_query_to_object({40, 20, 0}, depth, seg, 7, Pose::identity(), Pose::identity(), kCam);
    CHECK(fixed == q);
  }

  TEST_CASE("fixing a query follows the pose chain") {
    // Camera centered at c: world_to_camera is a translation by -c.
    const Point3 c(0.5, -1.0, 2.0);
    const Pose w2c = Pose::from_translation(-c);
    const Point3 q = unproject(kCam, {10, 30}, 4.0);
    CHECK((fix_query_to_object(q, w2c, Pose::identity()) - (q + c)).norm() < 1e-15);

    const Pose w2o = Pose::from_axis_angle(Point3(1, 2, 3), 0.7, Point3(0.1, 0.2, 0.3));
    const Point3 want = w2o.rotation() * (q + c) + w2o.translation();
    CHECK((fix_query_to_object(q, w2c, w2o) - want).norm() < 1e-14);
  }

  TEST_CASE("query checks") {
    DepthMap depth = flat_depth(3.0);
    MaskMap seg(64, 48, 7);
    try {
      fix_query_to_object({40, 20, 0}, depth, seg, 8, Pose::identity(), Pose::identity(), kCam);
      FAIL("expected ObjectIdMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ObjectIdMismatch);
    }
    depth.at(40, 20) = 0.0;
    try {
      fix_query_to_object({40, 20, 0}, depth, seg, 7, Pose::identity(), Pose::identity(), kCam);
      FAIL("expected InvalidDepthAtQuery");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidDepthAtQuery);
    }
  }

  TEST_CASE("rigid tracks") {
    const Point3 q(0.2, 0.1, 3.0);
    const std::vector<Pose> ident(5, Pose::identity());
    for (const auto& p : derive_rigid_track(q, ident, ident)) CHECK(p == q);

    // Object moving +x one unit per frame: world_to_object translates by -t.
    std::vector<Pose> w2o;
    for (int t = 0; t < 5; ++t) w2o.push_back(Pose::from_translation({-double(t), 0, 0}));
    const auto moving = derive_rigid_track(q, w2o, ident);
    for (int t = 0; t < 5; ++t) CHECK((moving[t] - (q + Point3(t, 0, 0))).norm() < 1e-15);

    // Camera orbiting a static object by 90 degrees about y.
    std::vector<Pose> w2c;
    for (int t = 0; t < 4; ++t) {
      const double a = std::numbers::pi / 2 * t / 3;
      w2c.push_back(Pose::from_axis_angle(Point3::UnitY(), a, Point3(0, 0, 5)));
    }
    const std::vector<Pose> still(4, Pose::identity());
    const auto orbit = derive_rigid_track(q, still, w2c);
    for (int t = 0; t < 4; ++t) {
      const Eigen::Matrix3d r = w2c[t].rotation();
      CHECK((orbit[t] - (r * q + Point3(0, 0, 5))).norm() < 1e-14);
    }
  }

  TEST_CASE("depth consistency") {
    const auto rel = MarginRule::relative(0.05);
    CHECK(visibility_of({0, 0, 4.0}, 4.0, rel)[0] == 1);
    CHECK(visibility_of({0, 0, 5.0}, 4.0, rel)[0] == 0);
    CHECK(visibility_of({0, 0, 4.19}, 4.0, rel)[0] == 1);
    CHECK(visibility_of({0, 0, 4.21}, 4.0, rel)[0] == 0);
    // Two-sided rules also reject points well in front of the surface.
    CHECK(visibility_of({0, 0, 3.0}, 4.0, rel)[0] == 0);
    CHECK(visibility_of({0, 0, 3.0}, 4.0, MarginRule::relative(0.05, true))[0] == 1);
    CHECK(visibility_of({0, 0, 4.0}, 4.0 + 5e-7, MarginRule::absolute(1e-6))[0] == 1);
    CHECK(visibility_of({0, 0, 4.0}, 4.0 + 2e-6, MarginRule::absolute(1e-6))[0] == 0);
  }

  TEST_CASE("hand masks and image bounds occlude") {
    MaskMap hand(64, 48, 0);
    const Point3 p(0, 0, 4.0);  // projects onto the principal point
    CHECK(visibility_of(p, 4.0, MarginRule::relative(0.05), {hand})[0] == 1);
    hand.at(32, 24) = 1;
    CHECK(visibility_of(p, 4.0, MarginRule::relative(0.05), {hand})[0] == 0);
    CHECK(visibility_of({10, 0, 4.0}, 4.0, MarginRule::relative(0.05))[0] == 0);
    CHECK(visibility_of({0, 0, -4.0}, 4.0, MarginRule::relative(0.05))[0] == 0);
    CHECK_THROWS_AS(visibility_of(p, 4.0, MarginRule::relative(0.05), {MaskMap(10, 10)}), Error);
  }

  TEST_CASE("bilinear depth sampling") {
    DepthMap d(4, 4, 2.0);
    d.at(1, 1) = 4.0;
    CHECK(*sample_depth(d, {0.5, 0.5}, DepthSampling::Bilinear) == doctest::Approx(2.5));
    CHECK(*sample_depth(d, {1.0, 1.0}, DepthSampling::Bilinear) == 4.0);
    CHECK(*sample_depth(d, {3.0, 3.0}, DepthSampling::Bilinear) == 2.0);
    CHECK_FALSE(sample_depth(d, {-1.0, 0.0}).has_value());
  }

  TEST_CASE("default margins per source") {
    CHECK(default_margin(Source::DriveTrack).one_sided);
    CHECK(default_margin(Source::ADT).kind == MarginRule::Kind::Relative);
    CHECK(default_margin(Source::Synthetic).kind == MarginRule::Kind::Absolute);
  }

  TEST_CASE("nearest Gaussian center") {
    const DepthMap depth = flat_depth(4.0);
    const Query q{40, 20, 1};
    const std::vector<Pose> w2c(3, Pose::identity());
    const Point3 target = unproject(kCam, q.pixel(), 4.0);

    std::vector<std::vector<Point3>> one(3, std::vector<Point3>{Point3(0.3, 0.1, 5)});
    auto g = gaussian_nearest_track(q, depth, one, w2c, kCam);
    CHECK(g.center_index == 0);
    CHECK((g.snapped_query - project(kCam, Point3(0.3, 0.1, 5))).norm() < 1e-12);

    std::vector<std::vector<Point3>> two(3, std::vector<Point3>{Point3(1, 1, 9), target});
    g = gaussian_nearest_track(q, depth, two, w2c, kCam);
    CHECK(g.center_index == 1);
    CHECK((g.snapped_query - q.pixel()).norm() < 1e-12);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<std::vector<Point3>> many(3);
    for (int i = 0; i < 100; ++i) {
      const Point3 c(u(rng), u(rng), 4 + u(rng));
      for (int t = 0; t < 3; ++t) many[t].push_back(c + Point3(0.1 * t, 0, 0));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < 100; ++i) {
      if ((many[1][i] - target).norm() < (many[1][best] - target).norm()) best = i;
    }
    g = gaussian_nearest_track(q, depth, many, w2c, kCam);
    CHECK(g.center_index == best);
    CHECK(g.track.size() == 3);
  }

  TEST_CASE("static baseline") {
    const auto still = testing::random_video(60, 32, 10, false);
    const auto p = static_baseline(still);
    for (std::size_t k = 0; k < p.tracks.values().size(); ++k) {
      CHECK((p.tracks.values()[k] - still.tracks.values()[k]).norm() < 1e-9);
    }
    for (auto v : p.visibility.values()) CHECK(v == 1);

    const auto moving = testing::random_video(61, 32, 10, true);
    EvalConfig c;
    const double perfect = evaluate_video(moving, testing::as_prediction(moving), c).values.aj;
    CHECK(evaluate_video(moving, static_baseline(moving), c).values.aj < perfect);
  }
}
