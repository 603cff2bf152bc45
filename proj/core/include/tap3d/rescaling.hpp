#pragma once

#include <compare>
#include <optional>
#include <span>
#include <vector>

#include "tap3d/trackset.hpp"

namespace tap3d {

/// Predicted points with a norm at or below this (meters) carry no usable
/// scale information and are left out of every ratio.
inline constexpr double kDegenerateNorm = 1e-9;

class RescaleMode {
 public:
  enum class Kind { GlobalMedian, PerTrajectory, LocalNeighborhood };

  static RescaleMode global_median() { return RescaleMode(Kind::GlobalMedian, 0.0); }
  static RescaleMode per_trajectory() { return RescaleMode(Kind::PerTrajectory, 0.0); }
  /// tau is the tubelet radius in meters and must be positive.
  static RescaleMode local_neighborhood(double tau);

  Kind kind() const { return kind_; }
  double tau() const { return tau_; }

 private:
  RescaleMode(Kind kind, double tau) : kind_(kind), tau_(tau) {}
  Kind kind_;
  double tau_;
};

/// Tubelet radius used for a source when none is given explicitly:
/// 10 cm for DriveTrack, 3 cm otherwise.
double default_tau(Source source);

/// Median with the even-count rule (mean of the two central values).
/// Reorders `values`. Throws InvalidArgument on an empty input.
double median_of(std::vector<double>& values);

/// Median of |P| / |P_hat| over all points and frames (or only GT-visible
/// ones). Throws AllDegenerate when every predicted norm is <= kDegenerateNorm.
double global_median_factor(const GroundTruthRecord& gt, const PredictionRecord& pred,
                            bool visible_only = false);

/// |P_tq| / |P_hat_tq| per track; nullopt marks a degenerate query-frame
/// prediction (DegenerateQueryPrediction), which is scored as all-incorrect.
std::vector<std::optional<double>> per_trajectory_factors(const GroundTruthRecord& gt,
                                                          const PredictionRecord& pred);

struct TrackSample {
  int frame = 0;
  int track = 0;
  auto operator<=>(const TrackSample&) const = default;
};

/// All (track, frame) samples within tau of the anchor trajectory at the same
/// frame. Members are sorted by (frame, track).
struct Tubelet {
  int anchor = 0;
  std::vector<TrackSample> members;
  bool operator==(const Tubelet&) const = default;
};

/// One tubelet per track, built with a per-frame uniform hash grid of cell
/// size tau.
std::vector<Tubelet> build_tubelets(const TrackArray& gt_tracks, double tau);

struct TubeletUnit {
  Tubelet tubelet;
  /// Anchor's query-distance ratio; nullopt when the anchor's query-frame
  /// prediction is degenerate.
  std::optional<double> scale;
};

/// Predictions prepared for scoring under one rescale mode.
///
/// GlobalMedian and PerTrajectory hold a rescaled prediction in `prediction`.
/// LocalNeighborhood keeps `prediction` unscaled and carries one unit per
/// anchor track; each unit is scored as a single trajectory.
struct RescaledPrediction {
  RescaleMode mode = RescaleMode::global_median();
  PredictionRecord prediction;
  std::optional<double> global_factor;
  /// Tracks whose positions count as incorrect (PerTrajectory only).
  std::vector<std::uint8_t> degenerate_tracks;
  std::vector<TubeletUnit> tubelets;
};

struct RescaleOptions {
  bool visible_only_median = false;
};

RescaledPrediction apply_rescale(const GroundTruthRecord& gt, const PredictionRecord& pred,
                                 const RescaleMode& mode, const RescaleOptions& options = {});

}  // namespace tap3d
