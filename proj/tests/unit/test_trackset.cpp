#include <doctest.h>

#include <cmath>

#include "support/helpers.hpp"
#include "tap3d/error.hpp"
#include "tap3d/trackset.hpp"

using namespace tap3d;

namespace {

GroundTruthRecord tiny_record() {
  GroundTruthRecord r;
  r.video_id = "tiny";
  r.intrinsics = CameraIntrinsics(100, 100, 50, 50);
  r.tracks = TrackArray(2, 4, Point3(0, 0, 5));
  r.visibility = VisibilityArray(2, 4, 1);
  r.queries = {{50, 50, 0}, {50, 50, 2}};
  return r;
}

bool has(const std::vector<Violation>& v, Violation::Rule rule, int track = -1, int frame = -1) {
  for (const auto& x : v) {
    if (x.rule == rule && (track < 0 || x.track == track) && (frame < 0 || x.frame == frame)) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("trackset") {
  TEST_CASE("a well-formed record has no violations") {
    CHECK(validate(tiny_record()).empty());
    CHECK(validate(testing::random_video(3)).empty());
    CHECK_NOTHROW(require_valid(tiny_record()));
  }

  TEST_CASE("occluded query frame is reported") {
    auto r = tiny_record();
    r.visibility.at(1, 2) = 0;
    const auto v = validate(r);
    REQUIRE(v.size() == 1);
    CHECK(v.front() == Violation{Violation::Rule::QueryNotVisible, 1, 2});
  }

  TEST_CASE("non-finite position is reported with its coordinates") {
    auto r = tiny_record();
    r.tracks.at(0, 3) = Point3(NAN, 0, 5);
    const auto v = validate(r);
    REQUIRE(v.size() == 1);
    CHECK(v.front() == Violation{Violation::Rule::NonFinite, 0, 3});
    CHECK_THROWS_AS(require_valid(r), Error);
  }

  TEST_CASE("structural violations") {
    auto r = tiny_record();
    r.queries[0].frame = 9;
    r.tracks.at(1, 1) = Point3(0, 0, -1);
    r.fps = 0;
    const auto v = validate(r);
    CHECK(has(v, Violation::Rule::QueryFrameOutOfRange, 0));
    CHECK(has(v, Violation::Rule::VisibleBehindCamera, 1, 1));
    CHECK(has(v, Violation::Rule::InvalidFps));

    GroundTruthRecord empty = tiny_record();
    empty.tracks = TrackArray(0, 4);
    empty.visibility = VisibilityArray(0, 4);
    empty.queries.clear();
    CHECK(has(validate(empty), Violation::Rule::NoTracks));

    GroundTruthRecord one_frame = tiny_record();
    one_frame.tracks = TrackArray(2, 1, Point3(0, 0, 5));
    one_frame.visibility = VisibilityArray(2, 1, 1);
    one_frame.queries = {{50, 50, 0}, {50, 50, 0}};
    CHECK(has(validate(one_frame), Violation::Rule::TooFewFrames));
  }

  TEST_CASE("prediction validation") {
    const auto gt = tiny_record();
    PredictionRecord p{gt.tracks, gt.visibility};
    CHECK(validate(p, gt).empty());
    p.tracks.at(1, 0).x() = INFINITY;
    CHECK(validate(p, gt) == std::vector<Violation>{{Violation::Rule::NonFinite, 1, 0}});
    p.tracks = TrackArray(3, 4);
    CHECK(has(validate(p, gt), Violation::Rule::ShapeMismatch));
  }

  TEST_CASE("projection to 2D") {
    GroundTruthRecord r = tiny_record();
    r.intrinsics = CameraIntrinsics(500, 500, 320, 240);
    r.tracks.at(0, 1) = Point3(0, 0, 5);
    r.tracks.at(1, 3) = Point3(0.3, 0.2, -1);
    r.visibility.at(1, 3) = 0;
    const TrackSet2D s = to_2d(r);
    CHECK(s.xy.at(0, 1) == Point2(320, 240));
    CHECK(s.projected.at(0, 1) == 1);
    CHECK(s.projected.at(1, 3) == 0);
    CHECK(s.visibility == r.visibility);
  }

  TEST_CASE("ground-truth tracks reproject onto their query pixels") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto r = testing::random_video(seed, 48, 24);
      const TrackSet2D s = to_2d(r);
      for (int i = 0; i < r.num_tracks(); ++i) {
        const Query& q = r.queries[static_cast<std::size_t>(i)];
        CHECK((s.xy.at(i, q.frame) - q.pixel()).norm() < 1e-6);
      }
    }
  }
}
