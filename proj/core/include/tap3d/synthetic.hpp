#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tap3d/annotation.hpp"
#include "tap3d/geometry.hpp"
#include "tap3d/trackset.hpp"

namespace tap3d {

/// Constant-velocity rigid motion. At frame t the object frame sits at
/// position + t * velocity, rotated by t * spin degrees about `axis`.
struct Motion {
  Point3 position = Point3::Zero();
  Point3 velocity = Point3::Zero();
  double spin_deg_per_frame = 0.0;
  Point3 axis = Point3::UnitY();

  Pose object_to_world(int frame) const;
  Pose world_to_object(int frame) const { return object_to_world(frame).inverse(); }
};

/// Closed-form primitives, all defined around the object-frame origin.
/// Planes are y = 0 in the object frame.
struct Primitive {
  enum class Kind { Sphere, Box, Plane };
  Kind kind = Kind::Sphere;
  double radius = 0.5;
  Point3 half_extents = Point3::Constant(0.5);
};

struct SceneObject {
  int id = 1;  ///< segmentation label, must be >= 1
  Primitive shape;
  Motion motion;
};

/// Camera trajectory. Cameras use x right, y down, z forward; the world uses
/// the same axes, so y grows towards the ground.
struct CameraRig {
  enum class Kind { Linear, Orbit };
  Kind kind = Kind::Linear;

  // Linear: center = position + t * velocity, heading yaw + t * yaw_rate about y.
  Point3 position = Point3::Zero();
  Point3 velocity = Point3::Zero();
  double yaw_deg = 0.0;
  double yaw_rate_deg = 0.0;

  // Orbit: circles `target` at `radius`, always looking at it.
  Point3 target = Point3(0, 0, 5);
  double radius = 5.0;
  double start_deg = 0.0;
  double rate_deg = 0.5;
  double height = 0.0;

  Pose world_to_camera(int frame) const;
};

struct SceneSpec {
  std::string video_id = "synthetic";
  Source source = Source::Synthetic;
  ImageSize image{160, 120};
  CameraIntrinsics intrinsics{150.0, 150.0, 79.5, 59.5};
  int frames = 30;
  double fps = 30.0;
  int num_tracks = 64;
  std::uint64_t seed = 0;
  CameraRig camera;
  std::vector<SceneObject> objects;
  /// Also rasterize per-frame depth and label maps.
  bool render_maps = false;
};

struct RayHit {
  double depth = 0.0;  ///< camera z of the hit
  int object_id = 0;
};

/// Precomputed poses plus exact ray casting for one scene.
class Scene {
 public:
  explicit Scene(const SceneSpec& spec);

  int num_frames() const { return static_cast<int>(world_to_camera_.size()); }
  const SceneSpec& spec() const { return spec_; }
  const std::vector<Pose>& world_to_camera() const { return world_to_camera_; }
  const std::vector<Pose>& world_to_object(std::size_t object) const {
    return world_to_object_[object];
  }

  /// Nearest surface along the ray through an image coordinate.
  std::optional<RayHit> cast(int frame, const Point2& pixel) const;

  DepthMap render_depth(int frame) const;
  MaskMap render_labels(int frame) const;

 private:
  SceneSpec spec_;
  std::vector<Pose> world_to_camera_;
  std::vector<Pose> camera_to_world_;
  std::vector<std::vector<Pose>> world_to_object_;
};

struct SyntheticVideo {
  GroundTruthRecord record;
  std::vector<DepthMap> depth;         ///< empty unless render_maps
  std::vector<MaskMap> segmentation;   ///< empty unless render_maps
  std::vector<int> track_objects;      ///< object id per track
  std::vector<Point3> object_points;   ///< object-frame point per track
};

/// Samples query pixels, fixes them to the hit object, derives the rigid
/// tracks and their visibility against exact ray-cast depth. Deterministic
/// per seed. Throws DegenerateSpec for empty scenes or fewer than 2 frames.
SyntheticVideo synth_scene(const SceneSpec& spec);

/// Line-based scene description; see README for the format.
SceneSpec parse_scene_spec(std::string_view text);
std::string format_scene_spec(const SceneSpec& spec);

struct RandomSceneOptions {
  int num_tracks = 64;
  int frames = 30;
  ImageSize image{160, 120};
  bool moving = true;
  Source source = Source::Synthetic;
  std::string video_id = "synthetic";
};

/// Ground plane plus 2-4 spheres / boxes with random placement and motion.
SceneSpec random_scene_spec(std::uint64_t seed, const RandomSceneOptions& options = {});

}  // namespace tap3d
