#include "tap3d/filtering.hpp"

#include <algorithm>
#include <string>

namespace tap3d {

void FilterConfig::check() const {
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!in_unit(flicker_fraction) || !in_unit(mask_fraction)) {
    throw Error(ErrorCode::InvalidArgument, "filter fractions must lie in (0, 1]");
  }
  if (!(static_epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "static epsilon must be positive");
}

int count_transitions(std::span<const std::uint8_t> visibility) {
  int n = 0;
  for (std::size_t t = 1; t < visibility.size(); ++t) {
    n += (visibility[t] != 0) != (visibility[t - 1] != 0);
  }
  return n;
}

std::vector<std::uint8_t> flicker_filter(const VisibilityArray& visibility, const FilterConfig& config) {
  config.check();
  const double limit = config.flicker_fraction * visibility.num_frames();
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(visibility.num_tracks()), 1);
  for (int i = 0; i < visibility.num_tracks(); ++i) {
    if (count_transitions(visibility.track(i)) > limit) keep[static_cast<std::size_t>(i)] = 0;
  }
  return keep;
}

std::vector<std::uint8_t> mask_containment_filter(const TrackSet2D& tracks,
                                                  std::span<const MaskMap> masks,
                                                  const FilterConfig& config) {
  config.check();
  if (masks.size() != static_cast<std::size_t>(tracks.num_frames())) {
    throw Error(ErrorCode::DimensionMismatch, "need one mask per frame, got " +
                                                  std::to_string(masks.size()) + " for " +
                                                  std::to_string(tracks.num_frames()) + " frames");
  }
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(tracks.num_tracks()), 1);
  for (int i = 0; i < tracks.num_tracks(); ++i) {
    int counted = 0;
    int on_mask = 0;
    for (int t = 0; t < tracks.num_frames(); ++t) {
      if (!config.mask_whole_video && tracks.visibility.at(i, t) == 0) continue;
      ++counted;
      if (tracks.projected.at(i, t) == 0) continue;
      const auto label = sample_mask(masks[static_cast<std::size_t>(t)], tracks.xy.at(i, t));
      on_mask += label && *label != 0;
    }
    if (counted > 0 && static_cast<double>(on_mask) < config.mask_fraction * counted) {
      keep[static_cast<std::size_t>(i)] = 0;
    }
  }
  return keep;
}

bool static_track_detector(std::span<const Point3> track, const FilterConfig& config) {
  config.check();
  if (track.empty()) return true;
  Point3 lo = track.front();
  Point3 hi = track.front();
  for (const auto& p : track) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double eps = config.static_epsilon;
  // Any pair is at most the box diagonal apart, and at least one pair spans
  // the widest side.
  if ((hi - lo).norm() < eps) return true;
  if ((hi - lo).maxCoeff() >= eps) return false;
  const double eps2 = eps * eps;
  for (std::size_t a = 0; a < track.size(); ++a) {
    for (std::size_t b = a + 1; b < track.size(); ++b) {
      if ((track[a] - track[b]).squaredNorm() >= eps2) return false;
    }
  }
  return true;
}

VelocityStats velocity_stats(const TrackArray& tracks, double fps, std::vector<double> bin_edges) {
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");
  if (bin_edges.size() < 2 || !std::is_sorted(bin_edges.begin(), bin_edges.end()) ||
      std::adjacent_find(bin_edges.begin(), bin_edges.end()) != bin_edges.end()) {
    throw Error(ErrorCode::InvalidArgument, "need at least two strictly increasing bin edges");
  }
  VelocityStats out;
  out.bin_edges = std::move(bin_edges);
  out.histogram.assign(out.bin_edges.size() - 1, 0);
  const int frames = tracks.num_frames();
  for (int i = 0; i < tracks.num_tracks(); ++i) {
    const auto tr = tracks.track(i);
    double total = 0.0;
    for (int t = 1; t < frames; ++t) total += (tr[t] - tr[t - 1]).norm();
    const double speed = frames > 1 ? total / (frames - 1) * fps : 0.0;
    out.mean_speed.push_back(speed);

    const auto& e = out.bin_edges;
    if (speed < e.front() || speed > e.back()) continue;
    auto it = std::upper_bound(e.begin(), e.end(), speed);
    auto bin = static_cast<std::size_t>(it - e.begin()) - 1;
    bin = std::min(bin, out.histogram.size() - 1);
    ++out.histogram[bin];
  }
  return out;
}

GroundTruthRecord select_tracks(const GroundTruthRecord& record, std::span<const std::uint8_t> keep) {
  if (keep.size() != static_cast<std::size_t>(record.num_tracks())) {
    throw Error(ErrorCode::DimensionMismatch, "keep mask length differs from the track count");
  }
  const int kept = static_cast<int>(std::count_if(keep.begin(), keep.end(), [](auto k) { return k != 0; }));
  GroundTruthRecord out = record;
  out.tracks = TrackArray(kept, record.num_frames());
  out.visibility = VisibilityArray(kept, record.num_frames());
  out.queries.clear();
  int j = 0;
  for (int i = 0; i < record.num_tracks(); ++i) {
    if (keep[static_cast<std::size_t>(i)] == 0) continue;
    std::ranges::copy(record.tracks.track(i), out.tracks.track(j).begin());
    std::ranges::copy(record.visibility.track(i), out.visibility.track(j).begin());
    out.queries.push_back(record.queries[static_cast<std::size_t>(i)]);
    ++j;
  }
  return out;
}

}  // namespace tap3d
