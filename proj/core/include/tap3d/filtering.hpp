#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tap3d/annotation.hpp"
#include "tap3d/trackset.hpp"

namespace tap3d {

struct FilterConfig {
  double flicker_fraction = 0.10;
  double mask_fraction = 0.75;
  double static_epsilon = 0.01;  ///< meters
  /// Count mask containment over every frame, not just visible ones.
  bool mask_whole_video = false;

  /// Throws InvalidArgument when a fraction leaves (0, 1] or epsilon <= 0.
  void check() const;
};

/// Number of visibility state changes along one track.
int count_transitions(std::span<const std::uint8_t> visibility);

/// keep[i] is 1 unless track i flips visibility more than
/// flicker_fraction * T times.
std::vector<std::uint8_t> flicker_filter(const VisibilityArray& visibility,
                                         const FilterConfig& config = {});

/// keep[i] is 1 when track i lands on a nonzero mask label in at least
/// mask_fraction of its visible frames. Tracks with no counted frame are kept.
/// Frames where the point falls outside the image count as off-mask.
std::vector<std::uint8_t> mask_containment_filter(const TrackSet2D& tracks,
                                                  std::span<const MaskMap> masks,
                                                  const FilterConfig& config = {});

/// True when every pairwise distance along the track is below static_epsilon.
bool static_track_detector(std::span<const Point3> track, const FilterConfig& config = {});

struct VelocityStats {
  std::vector<double> mean_speed;   ///< m/s per track
  std::vector<double> bin_edges;
  std::vector<std::int64_t> histogram;  ///< counts per [edge_k, edge_k+1); last bin closed
};

/// Mean consecutive-frame displacement times fps, per track.
VelocityStats velocity_stats(const TrackArray& tracks, double fps,
                             std::vector<double> bin_edges = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0});

/// Copy of the record keeping only tracks with keep[i] != 0.
GroundTruthRecord select_tracks(const GroundTruthRecord& record, std::span<const std::uint8_t> keep);

}  // namespace tap3d
