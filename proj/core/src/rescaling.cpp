#include "tap3d/rescaling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

namespace tap3d {

namespace {

using CellKey = std::array<std::int64_t, 3>;

CellKey cell_of(const Point3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

void require_compatible(const GroundTruthRecord& gt, const PredictionRecord& pred) {
  if (!pred.tracks.same_shape(gt.num_tracks(), gt.num_frames()) ||
      !pred.visibility.same_shape(gt.num_tracks(), gt.num_frames())) {
    throw Error(ErrorCode::DimensionMismatch, "prediction shape differs from ground truth");
  }
}

std::optional<double> query_ratio(const GroundTruthRecord& gt, const PredictionRecord& pred,
                                  int track) {
  const int tq = gt.queries[static_cast<std::size_t>(track)].frame;
  const double pred_norm = pred.tracks.at(track, tq).norm();
  if (!(pred_norm > kDegenerateNorm) || !std::isfinite(pred_norm)) return std::nullopt;
  return gt.tracks.at(track, tq).norm() / pred_norm;
}

}  // namespace

RescaleMode RescaleMode::local_neighborhood(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::InvalidArgument, "tubelet radius must be positive");
  }
  return RescaleMode(Kind::LocalNeighborhood, tau);
}

double default_tau(Source source) { return source == Source::DriveTrack ? 0.10 : 0.03; }

double median_of(std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty set");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double global_median_factor(const GroundTruthRecord& gt, const PredictionRecord& pred,
                            bool visible_only) {
  require_compatible(gt, pred);
  std::vector<double> ratios;
  ratios.reserve(gt.tracks.values().size());
  for (int i = 0; i < gt.num_tracks(); ++i) {
    for (int t = 0; t < gt.num_frames(); ++t) {
      if (visible_only && !gt.visibility.at(i, t)) continue;
      const double pred_norm = pred.tracks.at(i, t).norm();
      if (!(pred_norm > kDegenerateNorm) || !std::isfinite(pred_norm)) continue;
      ratios.push_back(gt.tracks.at(i, t).norm() / pred_norm);
    }
  }
  if (ratios.empty()) {
    throw Error(ErrorCode::AllDegenerate, "every predicted point has a near-zero norm");
  }
  return median_of(ratios);
}

std::vector<std::optional<double>> per_trajectory_factors(const GroundTruthRecord& gt,
                                                          const PredictionRecord& pred) {
  require_compatible(gt, pred);
  std::vector<std::optional<double>> out;
  out.reserve(static_cast<std::size_t>(gt.num_tracks()));
  for (int i = 0; i < gt.num_tracks(); ++i) out.push_back(query_ratio(gt, pred, i));
  return out;
}

std::vector<Tubelet> build_tubelets(const TrackArray& gt_tracks, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tubelet radius must be positive");
  const int q = gt_tracks.num_tracks();
  const int frames = gt_tracks.num_frames();

  std::vector<Tubelet> tubelets(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) tubelets[static_cast<std::size_t>(i)].anchor = i;

  struct Entry {
    CellKey key;
    int track;
  };
  std::vector<Entry> grid;
  grid.reserve(static_cast<std::size_t>(q));
  std::vector<int> hits;

  for (int t = 0; t < frames; ++t) {
    grid.clear();
    for (int j = 0; j < q; ++j) {
      const Point3& p = gt_tracks.at(j, t);
      if (p.allFinite()) grid.push_back({cell_of(p, tau), j});
    }
    std::sort(grid.begin(), grid.end(), [](const Entry& a, const Entry& b) {
      return a.key != b.key ? a.key < b.key : a.track < b.track;
    });

    for (int i = 0; i < q; ++i) {
      const Point3& anchor = gt_tracks.at(i, t);
      if (!anchor.allFinite()) continue;
      const CellKey center = cell_of(anchor, tau);
      hits.clear();
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          for (std::int64_t dz = -1; dz <= 1; ++dz) {
            const CellKey key{center[0] + dx, center[1] + dy, center[2] + dz};
            auto lo = std::lower_bound(grid.begin(), grid.end(), key,
                                       [](const Entry& e, const CellKey& k) { return e.key < k; });
            for (; lo != grid.end() && lo->key == key; ++lo) {
              if ((gt_tracks.at(lo->track, t) - anchor).norm() < tau) hits.push_back(lo->track);
            }
          }
        }
      }
      std::sort(hits.begin(), hits.end());
      auto& members = tubelets[static_cast<std::size_t>(i)].members;
      for (int j : hits) members.push_back({t, j});
    }
  }
  return tubelets;
}

RescaledPrediction apply_rescale(const GroundTruthRecord& gt, const PredictionRecord& pred,
                                 const RescaleMode& mode, const RescaleOptions& options) {
  require_compatible(gt, pred);
  RescaledPrediction out;
  out.mode = mode;
  out.prediction = pred;
  out.degenerate_tracks.assign(static_cast<std::size_t>(gt.num_tracks()), 0);

  switch (mode.kind()) {
    case RescaleMode::Kind::GlobalMedian: {
      const double factor = global_median_factor(gt, pred, options.visible_only_median);
      for (auto& p : out.prediction.tracks.values()) p *= factor;
      out.global_factor = factor;
      break;
    }
    case RescaleMode::Kind::PerTrajectory: {
      const auto factors = per_trajectory_factors(gt, pred);
      for (int i = 0; i < gt.num_tracks(); ++i) {
        const auto& factor = factors[static_cast<std::size_t>(i)];
        if (!factor) {
          out.degenerate_tracks[static_cast<std::size_t>(i)] = 1;
          continue;
        }
        for (auto& p : out.prediction.tracks.track(i)) p *= *factor;
      }
      break;
    }
    case RescaleMode::Kind::LocalNeighborhood: {
      auto tubelets = build_tubelets(gt.tracks, mode.tau());
      out.tubelets.reserve(tubelets.size());
      for (auto& tubelet : tubelets) {
        const int anchor = tubelet.anchor;
        out.tubelets.push_back({std::move(tubelet), query_ratio(gt, pred, anchor)});
      }
      break;
    }
  }
  return out;
}

}  // namespace tap3d
