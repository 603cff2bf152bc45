#include "tap3d/annotation.hpp"

#include <limits>
#include <string>

namespace tap3d {

namespace {

bool valid_depth(double d) { return std::isfinite(d) && d > 0.0; }

}  // namespace

std::optional<double> sample_depth(const DepthMap& depth, const Point2& p, DepthSampling sampling) {
  if (!p.allFinite()) return std::nullopt;
  if (sampling == DepthSampling::Nearest) {
    const PixelIndex px = nearest_pixel(p);
    if (!depth.contains(px.col, px.row)) return std::nullopt;
    const double d = depth.at(px.col, px.row);
    return valid_depth(d) ? std::optional<double>(d) : std::nullopt;
  }

  const double fx = std::floor(p.x());
  const double fy = std::floor(p.y());
  const int c0 = static_cast<int>(fx);
  const int r0 = static_cast<int>(fy);
  if (!depth.contains(c0, r0) || !depth.contains(c0 + 1, r0 + 1)) {
    // On the last row / column the nearest sample is the only one available.
    return sample_depth(depth, p, DepthSampling::Nearest);
  }
  const double ax = p.x() - fx;
  const double ay = p.y() - fy;
  const double d00 = depth.at(c0, r0);
  const double d10 = depth.at(c0 + 1, r0);
  const double d01 = depth.at(c0, r0 + 1);
  const double d11 = depth.at(c0 + 1, r0 + 1);
  if (!valid_depth(d00) || !valid_depth(d10) || !valid_depth(d01) || !valid_depth(d11)) {
    return std::nullopt;
  }
  return (1 - ay) * ((1 - ax) * d00 + ax * d10) + ay * ((1 - ax) * d01 + ax * d11);
}

std::optional<std::int32_t> sample_mask(const MaskMap& mask, const Point2& p) {
  if (!p.allFinite()) return std::nullopt;
  const PixelIndex px = nearest_pixel(p);
  if (!mask.contains(px.col, px.row)) return std::nullopt;
  return mask.at(px.col, px.row);
}

MarginRule MarginRule::absolute(double meters, bool one_sided) {
  if (!(meters > 0.0)) throw Error(ErrorCode::InvalidArgument, "depth margin must be positive");
  return {Kind::Absolute, meters, one_sided};
}

MarginRule MarginRule::relative(double fraction, bool one_sided) {
  if (!(fraction > 0.0)) throw Error(ErrorCode::InvalidArgument, "depth margin must be positive");
  return {Kind::Relative, fraction, one_sided};
}

bool MarginRule::consistent(double point_depth, double observed_depth) const {
  const double slack = kind == Kind::Absolute ? value : value * observed_depth;
  const double diff = point_depth - observed_depth;
  return one_sided ? diff < slack : std::abs(diff) < slack;
}

MarginRule default_margin(Source source) {
  switch (source) {
    case Source::DriveTrack: return MarginRule::relative(0.05, true);
    case Source::Synthetic: return MarginRule::absolute(1e-6);
    case Source::ADT:
    case Source::PStudio: break;
  }
  return MarginRule::relative(0.05);
}

std::vector<std::uint8_t> compute_visibility(std::span<const Point3> track,
                                             const DepthLookup& depth, const ImageSize& image,
                                             const CameraIntrinsics& intrinsics,
                                             const MarginRule& margin,
                                             std::span<const MaskMap> hand_masks) {
  if (!hand_masks.empty() && hand_masks.size() != track.size()) {
    throw Error(ErrorCode::DimensionMismatch, "need one hand mask per frame");
  }
  for (const auto& mask : hand_masks) {
    if (mask.size() != image) {
      throw Error(ErrorCode::DimensionMismatch, "hand mask size differs from the depth raster");
    }
  }

  std::vector<std::uint8_t> visible(track.size(), 0);
  for (std::size_t t = 0; t < track.size(); ++t) {
    const auto pixel = try_project(intrinsics, track[t]);
    if (!pixel || !in_image(image, *pixel)) continue;
    const auto observed = depth(static_cast<int>(t), *pixel);
    if (!observed || !margin.consistent(track[t].z(), *observed)) continue;
    if (!hand_masks.empty()) {
      const auto on_hand = sample_mask(hand_masks[t], *pixel);
      if (on_hand && *on_hand != 0) continue;
    }
    visible[t] = 1;
  }
  return visible;
}

std::vector<std::uint8_t> compute_visibility(std::span<const Point3> track,
                                             std::span<const DepthMap> depth,
                                             const CameraIntrinsics& intrinsics,
                                             const MarginRule& margin,
                                             std::span<const MaskMap> hand_masks,
                                             DepthSampling sampling) {
  if (depth.size() != track.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "track has " + std::to_string(track.size()) + " frames but " +
                    std::to_string(depth.size()) + " depth maps were given");
  }
  if (depth.empty()) return {};
  const ImageSize image = depth.front().size();
  for (const auto& map : depth) {
    if (map.size() != image) throw Error(ErrorCode::DimensionMismatch, "depth maps differ in size");
  }
  const DepthLookup lookup = [&](int frame, const Point2& p) {
    return sample_depth(depth[static_cast<std::size_t>(frame)], p, sampling);
  };
  return compute_visibility(track, lookup, image, intrinsics, margin, hand_masks);
}

Point3 fix_query_to_object(const Point3& query_camera, const Pose& world_to_camera,
                           const Pose& world_to_object) {
  return world_to_object * (world_to_camera.inverse() * query_camera);
}

Point3 fix_query_to_object(const Query& query, const DepthMap& depth, const MaskMap& segmentation,
                           int object_id, const Pose& world_to_camera, const Pose& world_to_object,
                           const CameraIntrinsics& intrinsics) {
  if (segmentation.size() != depth.size()) {
    throw Error(ErrorCode::DimensionMismatch, "segmentation and depth rasters differ in size");
  }
  const auto d = sample_depth(depth, query.pixel());
  if (!d) {
    throw Error(ErrorCode::InvalidDepthAtQuery,
                "no valid depth at (" + std::to_string(query.x) + ", " + std::to_string(query.y) + ")");
  }
  const auto label = sample_mask(segmentation, query.pixel());
  if (!label || *label != object_id) {
    throw Error(ErrorCode::ObjectIdMismatch,
                "query lies on label " + (label ? std::to_string(*label) : std::string("none")) +
                    ", expected object " + std::to_string(object_id));
  }
  return fix_query_to_object(unproject(intrinsics, query.pixel(), *d), world_to_camera,
                             world_to_object);
}

std::vector<Point3> derive_rigid_track(const Point3& query_object,
                                       std::span<const Pose> world_to_object,
                                       std::span<const Pose> world_to_camera) {
  if (world_to_object.size() != world_to_camera.size()) {
    throw Error(ErrorCode::DimensionMismatch, "object and camera pose sequences differ in length");
  }
  std::vector<Point3> track;
  track.reserve(world_to_camera.size());
  for (std::size_t t = 0; t < world_to_camera.size(); ++t) {
    track.push_back(world_to_camera[t] * (world_to_object[t].inverse() * query_object));
  }
  return track;
}

GaussianTrack gaussian_nearest_track(const Query& query, const DepthMap& depth_at_query,
                                     std::span<const std::vector<Point3>> centers,
                                     std::span<const Pose> world_to_camera,
                                     const CameraIntrinsics& intrinsics) {
  if (centers.size() != world_to_camera.size()) {
    throw Error(ErrorCode::DimensionMismatch, "center and camera sequences differ in length");
  }
  if (query.frame < 0 || static_cast<std::size_t>(query.frame) >= centers.size()) {
    throw Error(ErrorCode::InvalidArgument, "query frame outside the sequence");
  }
  const std::size_t n = centers.front().size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one center");
  for (const auto& frame : centers) {
    if (frame.size() != n) throw Error(ErrorCode::DimensionMismatch, "center count varies per frame");
  }

  const auto d = sample_depth(depth_at_query, query.pixel());
  if (!d) throw Error(ErrorCode::InvalidDepthAtQuery, "no valid depth at the query pixel");
  const Point3 query_camera = unproject(intrinsics, query.pixel(), *d);

  const auto tq = static_cast<std::size_t>(query.frame);
  const Pose& camera_at_query = world_to_camera[tq];
  GaussianTrack out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dist = (query_camera - camera_at_query * centers[tq][i]).norm();
    if (dist < best) {
      best = dist;
      out.center_index = i;
    }
  }

  out.track.reserve(centers.size());
  for (std::size_t t = 0; t < centers.size(); ++t) {
    out.track.push_back(world_to_camera[t] * centers[t][out.center_index]);
  }
  out.snapped_query = project(intrinsics, out.track[tq]);
  return out;
}

PredictionRecord static_baseline(const GroundTruthRecord& gt) {
  const int q = gt.num_tracks();
  const int frames = gt.num_frames();
  PredictionRecord out{TrackArray(q, frames), VisibilityArray(q, frames, 1), gt.storage.tracks};
  for (int i = 0; i < q; ++i) {
    const Query& query = gt.queries[static_cast<std::size_t>(i)];
    const double depth = gt.tracks.at(i, query.frame).z();
    const Point3 p = unproject(gt.intrinsics, query.pixel(), depth);
    for (auto& point : out.tracks.track(i)) point = p;
  }
  return out;
}

}  // namespace tap3d
