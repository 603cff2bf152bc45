#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "tap3d/synthetic.hpp"
#include "tap3d/trackset.hpp"

namespace testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("tap3d_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline tap3d::GroundTruthRecord random_video(std::uint64_t seed, int tracks = 32, int frames = 20,
                                             bool moving = true) {
  tap3d::RandomSceneOptions o;
  o.num_tracks = tracks;
  o.frames = frames;
  o.moving = moving;
  o.video_id = "video_" + std::to_string(seed);
  return tap3d::synth_scene(tap3d::random_scene_spec(seed, o)).record;
}

inline tap3d::PredictionRecord as_prediction(const tap3d::GroundTruthRecord& gt) {
  return {gt.tracks, gt.visibility, gt.storage.tracks};
}

/// Ground truth perturbed by isotropic Gaussian noise and random visibility flips.
inline tap3d::PredictionRecord noisy_prediction(const tap3d::GroundTruthRecord& gt, std::mt19937_64& rng,
                                                double sigma, double flip = 0.1) {
  tap3d::PredictionRecord p = as_prediction(gt);
  std::normal_distribution<double> noise(0.0, sigma);
  std::bernoulli_distribution flipper(flip);
  for (auto& x : p.tracks.values()) x += tap3d::Point3(noise(rng), noise(rng), noise(rng));
  for (auto& v : p.visibility.values()) {
    if (flipper(rng)) v = v ? 0 : 1;
  }
  return p;
}

}  // namespace testing
