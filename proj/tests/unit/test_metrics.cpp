#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles/oracles.hpp"
#include "support/helpers.hpp"
#include "tap3d/error.hpp"
#include "tap3d/metrics.hpp"

using namespace tap3d;

namespace {

GroundTruthRecord line_record(int frames, std::vector<std::uint8_t> vis) {
  GroundTruthRecord r;
  r.video_id = "line";
  r.intrinsics = CameraIntrinsics(100, 100, 0, 0);
  r.tracks = TrackArray(1, frames);
  for (int t = 0; t < frames; ++t) r.tracks.at(0, t) = Point3(0.1 * t, 0, 4);
  r.visibility = VisibilityArray(1, frames);
  r.visibility.values() = std::move(vis);
  int tq = 0;
  while (tq < frames && !r.visibility.at(0, tq)) ++tq;
  r.queries = {{0, 0, tq}};
  return r;
}

VideoResult scored(const std::string& id, Source source, double value) {
  VideoScores s;
  s.values.aj = s.values.apd = s.values.oa = value;
  s.values.aj_per_threshold = s.values.apd_per_threshold = {value};
  return {id, source, s, {}};
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("threshold families are validated") {
    CHECK(ThresholdFamily::pixel_adaptive().values() == std::vector<double>{1, 2, 4, 8, 16});
    CHECK(ThresholdFamily::fixed_metric().values() == std::vector<double>{0.01, 0.04, 0.16, 0.64, 2.56});
    CHECK_THROWS_AS(ThresholdFamily::pixel_adaptive({}), Error);
    CHECK_THROWS_AS(ThresholdFamily::pixel_adaptive({2, 1}), Error);
    CHECK_THROWS_AS(ThresholdFamily::fixed_metric({0, 1}), Error);
  }

  TEST_CASE("APD") {
    const auto gt = testing::random_video(31);
    const auto px = ThresholdFamily::pixel_adaptive();
    const auto perfect = apd3d(gt, testing::as_prediction(gt), px);
    CHECK(perfect.mean == 1.0);
    for (double v : perfect.per_threshold) CHECK(v == 1.0);

    // Two visible points; one 1 mm off, one 1 m off, single 1 cm radius.
    auto r = line_record(2, {1, 1});
    auto p = testing::as_prediction(r);
    p.tracks.at(0, 0).x() += 0.001;
    p.tracks.at(0, 1).x() += 1.0;
    p.visibility.values() = {0, 0};  // ignored by APD
    CHECK(apd3d(r, p, ThresholdFamily::fixed_metric({0.01})).mean == 0.5);
  }

  TEST_CASE("APD fails loudly without visible points") {
    auto r = line_record(3, {0, 0, 0});
    try {
      apd3d(r, testing::as_prediction(r), ThresholdFamily::fixed_metric());
      FAIL("expected NoVisiblePoints");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NoVisiblePoints);
    }
  }

  TEST_CASE("occlusion accuracy") {
    VisibilityArray gt(1, 4), pred(1, 4);
    gt.values() = {1, 0, 1, 1};
    pred.values() = {1, 1, 1, 0};
    CHECK(occlusion_accuracy(gt, gt) == 1.0);
    CHECK(occlusion_accuracy(gt, pred) == 0.5);
    VisibilityArray flipped = gt;
    for (auto& v : flipped.values()) v = !v;
    CHECK(occlusion_accuracy(gt, flipped) == 0.0);
  }

  TEST_CASE("3D average Jaccard") {
    const auto gt = testing::random_video(32);
    CHECK(aj3d(gt, testing::as_prediction(gt), ThresholdFamily::pixel_adaptive()).mean == 1.0);

    // v = [1,1,0], v_hat = [1,0,1], alpha true at t0: TP = 1, denominator = 2 + 1 + 0.
    auto r = line_record(3, {1, 1, 0});
    auto p = testing::as_prediction(r);
    p.visibility.values() = {1, 0, 1};
    p.tracks.at(0, 1).x() += 5;  // alpha at t1 is irrelevant
    const double want = oracle::jaccard_terms({1, 1, 0}, {1, 0, 1}, {1, 0, 0});
    CHECK(want == 1.0 / 3.0);
    CHECK(aj3d(r, p, ThresholdFamily::fixed_metric({0.01})).mean == want);

    p.visibility.values() = {0, 0, 0};
    CHECK(aj3d(r, p, ThresholdFamily::fixed_metric()).mean == 0.0);
  }

  TEST_CASE("2D metrics") {
    GroundTruthRecord r = line_record(2, {1, 0});
    r.intrinsics = CameraIntrinsics(100, 100, 128, 128);
    const TrackSet2D g = to_2d(r);
    TrackSet2D p = g;
    const std::vector<double> px = {1, 2, 4, 8, 16};
    CHECK(apd2d(g, p, px).mean == 1.0);
    CHECK(aj2d(g, p, px).mean == 1.0);

    // 3 px off on a 256 x 256 raster: inside 4, 8, 16 only.
    p.xy.at(0, 0).x() += 3;
    const auto scale = PixelScale::normalized({256, 256});
    CHECK(apd2d(g, p, px, scale).mean == 3.0 / 5.0);
    // Same offset on a 512-wide raster normalizes to 1.5 px.
    CHECK(apd2d(g, p, px, PixelScale::normalized({512, 256})).per_threshold ==
          std::vector<double>{0, 1, 1, 1, 1});

    p.xy.at(0, 0).x() += 97;
    CHECK(apd2d(g, p, px, scale).mean == 0.0);
  }

  TEST_CASE("3D indicators match 2D indicators for lateral errors at true depth") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> pos(-2, 2), depth(0.5, 30), err(-0.2, 0.2);
    const auto family = ThresholdFamily::pixel_adaptive();
    int mismatches = 0;
    for (int n = 0; n < 2000; ++n) {
      GroundTruthRecord r;
      r.intrinsics = CameraIntrinsics(480, 480, 320, 240);
      r.tracks = TrackArray(1, 1, Point3(pos(rng), pos(rng), depth(rng)));
      r.visibility = VisibilityArray(1, 1, 1);
      auto p = testing::as_prediction(r);
      p.tracks.at(0, 0) += Point3(err(rng), err(rng), 0) * r.tracks.at(0, 0).z() / 30;
      const auto a = apd3d(r, p, family).per_threshold;
      const auto b = apd2d(to_2d(r), to_2d(p, r.intrinsics), family.values()).per_threshold;
      mismatches += a != b;
    }
    CHECK(mismatches == 0);
  }

  TEST_CASE("AJ never exceeds APD and both grow with the radius") {
    std::mt19937_64 rng(43);
    for (int n = 0; n < 30; ++n) {
      const auto gt = testing::random_video(100 + static_cast<std::uint64_t>(n), 16, 12);
      const auto p = testing::noisy_prediction(gt, rng, 0.05, 0.2);
      for (const auto& fam : {ThresholdFamily::pixel_adaptive(), ThresholdFamily::fixed_metric()}) {
        const auto a = aj3d(gt, p, fam).per_threshold;
        const auto d = apd3d(gt, p, fam).per_threshold;
        for (std::size_t k = 0; k < a.size(); ++k) {
          CHECK(a[k] <= d[k]);
          if (k > 0) {
            CHECK(a[k - 1] <= a[k]);
            CHECK(d[k - 1] <= d[k]);
          }
        }
      }
    }
  }

  TEST_CASE("video scores agree with the reference implementation") {
    std::mt19937_64 rng(47);
    const std::vector<double> px = {1, 2, 4, 8, 16};
    for (int n = 0; n < 6; ++n) {
      const auto gt = testing::random_video(200 + static_cast<std::uint64_t>(n), 24, 16);
      auto p = testing::noisy_prediction(gt, rng, 0.03);
      for (auto& x : p.tracks.values()) x *= 1.7;
      for (int mode = 0; mode < 3; ++mode) {
        EvalConfig c;
        c.rescale = mode == 0 ? RescaleMode::Kind::GlobalMedian
                  : mode == 1 ? RescaleMode::Kind::PerTrajectory
                              : RescaleMode::Kind::LocalNeighborhood;
        c.tau = 0.10;
        const auto got = evaluate_video(gt, p, c).values;
        const auto want = oracle::score_video(gt, p, mode, px, true, 0.10);
        CHECK(got.aj == doctest::Approx(want.aj).epsilon(1e-12));
        CHECK(got.apd == doctest::Approx(want.apd).epsilon(1e-12));
        CHECK(got.oa == doctest::Approx(want.oa).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("degenerate query prediction counts as wrong under per-track scaling") {
    auto r = line_record(3, {1, 1, 1});
    auto p = testing::as_prediction(r);
    p.tracks.at(0, 0) = Point3::Zero();
    EvalConfig c;
    c.rescale = RescaleMode::Kind::PerTrajectory;
    const auto s = evaluate_video(r, p, c);
    CHECK(s.values.apd == 0.0);
    CHECK(s.values.oa == 1.0);
    CHECK(s.degenerate_tracks == std::vector<int>{0});
  }

  TEST_CASE("evaluate_video rejects mismatched or non-finite predictions") {
    const auto gt = testing::random_video(50, 8, 6);
    auto p = testing::as_prediction(gt);
    p.tracks.at(2, 3).y() = NAN;
    try {
      evaluate_video(gt, p, {});
      FAIL("expected ValidationFailed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ValidationFailed);
    }
    PredictionRecord small{TrackArray(3, 6), VisibilityArray(3, 6)};
    CHECK_THROWS_AS(evaluate_video(gt, small, {}), Error);
  }

  TEST_CASE("aggregation weighs sources equally") {
    const EvalConfig c;
    const std::vector<VideoResult> one = {scored("a", Source::ADT, 0.2), scored("b", Source::ADT, 0.4)};
    auto rep = aggregate(one, c);
    CHECK(rep.per_source.at("ADT").values.aj == doctest::Approx(0.3));
    CHECK(rep.overall.aj == doctest::Approx(0.3));

    std::vector<VideoResult> two;
    for (int k = 0; k < 10; ++k) two.push_back(scored("d" + std::to_string(k), Source::DriveTrack, 0.1));
    two.push_back(scored("p0", Source::PStudio, 0.5));
    two.push_back(scored("p1", Source::PStudio, 0.5));
    rep = aggregate(two, c);
    CHECK(rep.num_sources == 2);
    CHECK(rep.overall.aj == doctest::Approx(0.3));
  }

  TEST_CASE("aggregation reproduces the average column of a published table row") {
    // Static baseline row: per-source 3D-AJ / APD / OA, and the published average.
    struct Row {
      Source source;
      double aj, apd, oa;
    };
    const Row rows[] = {{Source::ADT, 4.9, 10.2, 55.4}, {Source::DriveTrack, 3.9, 6.5, 80.8},
                        {Source::PStudio, 5.9, 11.5, 75.8}};
    std::vector<VideoResult> results;
    for (const auto& row : rows) {
      VideoResult r = scored(std::string(to_string(row.source)), row.source, 0);
      r.scores->values.aj = row.aj;
      r.scores->values.apd = row.apd;
      r.scores->values.oa = row.oa;
      results.push_back(r);
    }
    const auto rep = aggregate(results, {});
    CHECK(std::round(rep.overall.aj * 10) / 10 == doctest::Approx(4.9));
    CHECK(std::round(rep.overall.apd * 10) / 10 == doctest::Approx(9.4));
    CHECK(std::round(rep.overall.oa * 10) / 10 == doctest::Approx(70.7));
  }

  TEST_CASE("failed videos are excluded and reported") {
    std::vector<VideoResult> results = {scored("a", Source::ADT, 0.6)};
    results.push_back({"broken", Source::ADT, std::nullopt, "NoVisiblePoints: nothing", ErrorCode::NoVisiblePoints});
    results.push_back(scored("a", Source::ADT, 0.0));
    const auto rep = aggregate(results, {});
    CHECK(rep.overall.aj == doctest::Approx(0.6));
    CHECK(rep.diagnostics.size() == 2);
  }

  TEST_CASE("pooling sums counts across a source") {
    auto a = line_record(2, {1, 1});
    auto b = line_record(4, {1, 1, 1, 1});
    auto pa = testing::as_prediction(a);
    auto pb = testing::as_prediction(b);
    pa.tracks.at(0, 0).x() += 1;
    pa.tracks.at(0, 1).x() += 1;  // video a: APD 0, video b: APD 1
    EvalConfig c;
    c.family = ThresholdFamily::fixed_metric({0.01});
    std::vector<VideoResult> r = {{"a", Source::ADT, evaluate_video(a, pa, c), {}},
                                  {"b", Source::ADT, evaluate_video(b, pb, c), {}}};
    CHECK(aggregate(r, c).overall.apd == doctest::Approx(0.5));
    c.pooling = true;
    CHECK(aggregate(r, c).overall.apd == doctest::Approx(4.0 / 6.0));
  }
}
