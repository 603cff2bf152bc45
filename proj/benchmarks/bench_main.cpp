#include <benchmark/benchmark.h>

#include <random>

#include "tap3d/metrics.hpp"
#include "tap3d/npy.hpp"
#include "tap3d/rescaling.hpp"
#include "tap3d/synthetic.hpp"

using namespace tap3d;

namespace {

GroundTruthRecord scene(int tracks, int frames) {
  RandomSceneOptions o;
  o.num_tracks = tracks;
  o.frames = frames;
  return synth_scene(random_scene_spec(17, o)).record;
}

PredictionRecord jitter(const GroundTruthRecord& gt) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.05);
  PredictionRecord p{gt.tracks, gt.visibility};
  for (auto& x : p.tracks.values()) x = 1.7 * x + Point3(n(rng), n(rng), n(rng));
  return p;
}

void BM_GlobalMedian(benchmark::State& state) {
  const auto gt = scene(static_cast<int>(state.range(0)), 150);
  const auto pred = jitter(gt);
  for (auto _ : state) benchmark::DoNotOptimize(global_median_factor(gt, pred));
  state.SetItemsProcessed(state.iterations() * gt.tracks.values().size());
}
BENCHMARK(BM_GlobalMedian)->Arg(256)->Arg(1024);

void BM_Tubelets(benchmark::State& state) {
  const auto gt = scene(static_cast<int>(state.range(0)), 100);
  for (auto _ : state) benchmark::DoNotOptimize(build_tubelets(gt.tracks, 0.05));
  state.SetItemsProcessed(state.iterations() * gt.tracks.values().size());
}
BENCHMARK(BM_Tubelets)->Arg(256)->Arg(1024);

void BM_EvaluateVideo(benchmark::State& state) {
  const auto gt = scene(512, 150);
  const auto pred = jitter(gt);
  EvalConfig c;
  c.rescale = static_cast<RescaleMode::Kind>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_video(gt, pred, c));
}
BENCHMARK(BM_EvaluateVideo)
    ->Arg(static_cast<int>(RescaleMode::Kind::GlobalMedian))
    ->Arg(static_cast<int>(RescaleMode::Kind::PerTrajectory))
    ->Arg(static_cast<int>(RescaleMode::Kind::LocalNeighborhood));

void BM_NpySerialize(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> values(n * 3, 0.5);
  const auto array = npy::make_float64({n, 3}, values);
  for (auto _ : state) benchmark::DoNotOptimize(npy::serialize(array));
  state.SetBytesProcessed(state.iterations() * n * 3 * sizeof(double));
}
BENCHMARK(BM_NpySerialize)->Arg(1 << 12)->Arg(1 << 18);

}  // namespace
BENCHMARK_MAIN();
