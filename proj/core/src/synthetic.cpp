#include "tap3d/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace tap3d {

namespace {

constexpr double kMinHit = 1e-9;
constexpr int kMaxPlacementAttempts = 2000;

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

std::optional<double> intersect_sphere(const Point3& o, const Point3& d, double r) {
  const double a = d.squaredNorm();
  const double b = 2.0 * o.dot(d);
  const double c = o.squaredNorm() - r * r;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double s0 = q / a;
  double s1 = q != 0.0 ? c / q : s0;
  if (s0 > s1) std::swap(s0, s1);
  if (s0 > kMinHit) return s0;
  if (s1 > kMinHit) return s1;
  return std::nullopt;
}

std::optional<double> intersect_box(const Point3& o, const Point3& d, const Point3& half) {
  double enter = -std::numeric_limits<double>::infinity();
  double leave = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (o[k] < -half[k] || o[k] > half[k]) return std::nullopt;
      continue;
    }
    double s0 = (-half[k] - o[k]) / d[k];
    double s1 = (half[k] - o[k]) / d[k];
    if (s0 > s1) std::swap(s0, s1);
    enter = std::max(enter, s0);
    leave = std::min(leave, s1);
  }
  if (leave < enter) return std::nullopt;
  if (enter > kMinHit) return enter;
  if (leave > kMinHit) return leave;
  return std::nullopt;
}

std::optional<double> intersect_plane(const Point3& o, const Point3& d) {
  if (d.y() == 0.0) return std::nullopt;
  const double s = -o.y() / d.y();
  return s > kMinHit ? std::optional<double>(s) : std::nullopt;
}

std::optional<double> intersect(const Primitive& shape, const Point3& o, const Point3& d) {
  switch (shape.kind) {
    case Primitive::Kind::Sphere: return intersect_sphere(o, d, shape.radius);
    case Primitive::Kind::Box: return intersect_box(o, d, shape.half_extents);
    case Primitive::Kind::Plane: return intersect_plane(o, d);
  }
  return std::nullopt;
}

void require_spec(const SceneSpec& spec) {
  if (spec.objects.empty()) throw Error(ErrorCode::DegenerateSpec, "scene has no objects");
  if (spec.frames < 2) throw Error(ErrorCode::DegenerateSpec, "scene needs at least 2 frames");
  if (spec.num_tracks < 1) throw Error(ErrorCode::DegenerateSpec, "scene needs at least 1 track");
  if (spec.image.width <= 0 || spec.image.height <= 0) {
    throw Error(ErrorCode::DegenerateSpec, "image size must be positive");
  }
  if (!(spec.fps > 0.0)) throw Error(ErrorCode::DegenerateSpec, "fps must be positive");
  for (const auto& obj : spec.objects) {
    if (obj.id < 1) throw Error(ErrorCode::DegenerateSpec, "object ids must be >= 1");
  }
}

// ---------------------------------------------------------------------------
// Text format

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_point(const Point3& p) {
  return fmt_double(p.x()) + "," + fmt_double(p.y()) + "," + fmt_double(p.z());
}

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "scene line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    parse_fail(line, "expected a number, got '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, int line) {
  const double v = parse_double(s, line);
  if (v != std::floor(v)) parse_fail(line, "expected an integer, got '" + s + "'");
  return static_cast<long long>(v);
}

Point3 parse_point(const std::string& s, int line) {
  Point3 p;
  std::stringstream ss(s);
  std::string part;
  int k = 0;
  while (std::getline(ss, part, ',')) {
    if (k >= 3) parse_fail(line, "expected x,y,z");
    p[k++] = parse_double(part, line);
  }
  if (k != 3) parse_fail(line, "expected x,y,z");
  return p;
}

std::map<std::string, std::string> parse_attributes(std::istringstream& in, int line) {
  std::map<std::string, std::string> attrs;
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) parse_fail(line, "expected key=value, got '" + token + "'");
    attrs[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return attrs;
}

class AttributeReader {
 public:
  AttributeReader(std::map<std::string, std::string> attrs, int line)
      : attrs_(std::move(attrs)), line_(line) {}

  double number(const std::string& key, double fallback) {
    auto it = take(key);
    return it ? parse_double(*it, line_) : fallback;
  }
  Point3 point(const std::string& key, const Point3& fallback) {
    auto it = take(key);
    return it ? parse_point(*it, line_) : fallback;
  }
  void finish() const {
    if (!attrs_.empty()) parse_fail(line_, "unknown attribute '" + attrs_.begin()->first + "'");
  }

 private:
  std::optional<std::string> take(const std::string& key) {
    auto it = attrs_.find(key);
    if (it == attrs_.end()) return std::nullopt;
    std::string value = it->second;
    attrs_.erase(it);
    return value;
  }

  std::map<std::string, std::string> attrs_;
  int line_;
};

Motion read_motion(AttributeReader& r) {
  Motion m;
  m.position = r.point("position", m.position);
  m.velocity = r.point("velocity", m.velocity);
  m.spin_deg_per_frame = r.number("spin", 0.0);
  m.axis = r.point("axis", m.axis);
  return m;
}

std::string motion_attributes(const Motion& m) {
  return " position=" + fmt_point(m.position) + " velocity=" + fmt_point(m.velocity) +
         " spin=" + fmt_double(m.spin_deg_per_frame) + " axis=" + fmt_point(m.axis);
}

}  // namespace

Pose Motion::object_to_world(int frame) const {
  const Point3 center = position + static_cast<double>(frame) * velocity;
  if (spin_deg_per_frame == 0.0) return Pose::from_translation(center);
  return Pose::from_axis_angle(axis, radians(spin_deg_per_frame * frame), center);
}

Pose CameraRig::world_to_camera(int frame) const {
  const double t = static_cast<double>(frame);
  if (kind == Kind::Linear) {
    const Pose camera_to_world =
        Pose::from_axis_angle(Point3::UnitY(), radians(yaw_deg + t * yaw_rate_deg),
                              position + t * velocity);
    return camera_to_world.inverse();
  }
  const double theta = radians(start_deg + t * rate_deg);
  const Point3 center = target + Point3(radius * std::sin(theta), height, -radius * std::cos(theta));
  const Point3 z = (target - center).normalized();
  const Point3 x = Point3::UnitY().cross(z).normalized();
  const Point3 y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return Pose(r, center).inverse();
}

Scene::Scene(const SceneSpec& spec) : spec_(spec) {
  require_spec(spec_);
  world_to_camera_.reserve(static_cast<std::size_t>(spec_.frames));
  for (int t = 0; t < spec_.frames; ++t) {
    world_to_camera_.push_back(spec_.camera.world_to_camera(t));
    camera_to_world_.push_back(world_to_camera_.back().inverse());
  }
  world_to_object_.resize(spec_.objects.size());
  for (std::size_t k = 0; k < spec_.objects.size(); ++k) {
    for (int t = 0; t < spec_.frames; ++t) {
      world_to_object_[k].push_back(spec_.objects[k].motion.world_to_object(t));
    }
  }
}

std::optional<RayHit> Scene::cast(int frame, const Point2& pixel) const {
  const CameraIntrinsics& k = spec_.intrinsics;
  // z component 1, so the ray parameter of a hit is its camera depth.
  const Point3 dir_camera((pixel.x() - k.cx()) / k.fx(), (pixel.y() - k.cy()) / k.fy(), 1.0);
  const Pose& c2w = camera_to_world_[static_cast<std::size_t>(frame)];
  const Point3 origin_world = c2w.translation();
  const Point3 dir_world = c2w.rotation() * dir_camera;

  std::optional<RayHit> best;
  for (std::size_t obj = 0; obj < spec_.objects.size(); ++obj) {
    const Pose& w2o = world_to_object_[obj][static_cast<std::size_t>(frame)];
    const auto s = intersect(spec_.objects[obj].shape, w2o * origin_world,
                             w2o.rotation() * dir_world);
    if (s && (!best || *s < best->depth)) best = RayHit{*s, spec_.objects[obj].id};
  }
  return best;
}

DepthMap Scene::render_depth(int frame) const {
  DepthMap map(spec_.image.width, spec_.image.height, 0.0);
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      if (auto hit = cast(frame, Point2(col, row))) map.at(col, row) = hit->depth;
    }
  }
  return map;
}

MaskMap Scene::render_labels(int frame) const {
  MaskMap map(spec_.image.width, spec_.image.height, 0);
  for (int row = 0; row < map.height(); ++row) {
    for (int col = 0; col < map.width(); ++col) {
      if (auto hit = cast(frame, Point2(col, row))) map.at(col, row) = hit->object_id;
    }
  }
  return map;
}

SyntheticVideo synth_scene(const SceneSpec& spec) {
  const Scene scene(spec);
  const int frames = spec.frames;
  const int q = spec.num_tracks;

  std::map<int, std::size_t> object_index;
  for (std::size_t k = 0; k < spec.objects.size(); ++k) object_index[spec.objects[k].id] = k;

  SyntheticVideo out;
  GroundTruthRecord& rec = out.record;
  rec.video_id = spec.video_id;
  rec.source = spec.source;
  rec.fps = spec.fps;
  rec.intrinsics = spec.intrinsics;
  rec.image_size = spec.image;
  rec.tracks = TrackArray(q, frames);
  rec.visibility = VisibilityArray(q, frames, 0);

  const DepthLookup exact_depth = [&scene](int frame, const Point2& p) -> std::optional<double> {
    auto hit = scene.cast(frame, p);
    return hit ? std::optional<double>(hit->depth) : std::nullopt;
  };
  const MarginRule margin = MarginRule::absolute(1e-6);

  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> pick_frame(0, frames - 1);
  std::uniform_int_distribution<int> pick_col(0, spec.image.width - 1);
  std::uniform_int_distribution<int> pick_row(0, spec.image.height - 1);

  for (int i = 0; i < q; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const int tq = pick_frame(rng);
      const Point2 pixel(pick_col(rng), pick_row(rng));
      const auto hit = scene.cast(tq, pixel);
      if (!hit) continue;
      const std::size_t obj = object_index.at(hit->object_id);

      const Point3 q_cam = unproject(spec.intrinsics, pixel, hit->depth);
      const auto tqs = static_cast<std::size_t>(tq);
      const Point3 q_obj =
          fix_query_to_object(q_cam, scene.world_to_camera()[tqs], scene.world_to_object(obj)[tqs]);
      const auto track = derive_rigid_track(q_obj, scene.world_to_object(obj), scene.world_to_camera());
      const auto visible = compute_visibility(track, exact_depth, spec.image, spec.intrinsics, margin);
      if (!visible[tqs]) continue;

      std::copy(track.begin(), track.end(), rec.tracks.track(i).begin());
      std::copy(visible.begin(), visible.end(), rec.visibility.track(i).begin());
      rec.queries.push_back({pixel.x(), pixel.y(), tq});
      out.track_objects.push_back(hit->object_id);
      out.object_points.push_back(q_obj);
      placed = true;
    }
    if (!placed) {
      throw Error(ErrorCode::DegenerateSpec,
                  "could not place track " + std::to_string(i) + ": no object is in view");
    }
  }

  if (spec.render_maps) {
    for (int t = 0; t < frames; ++t) {
      out.depth.push_back(scene.render_depth(t));
      out.segmentation.push_back(scene.render_labels(t));
    }
  }
  return out;
}

SceneSpec parse_scene_spec(std::string_view text) {
  SceneSpec spec;
  spec.objects.clear();
  std::istringstream lines{std::string(text)};
  std::string raw;
  int line = 0;
  bool have_intrinsics = false;

  while (std::getline(lines, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream in(raw);
    std::string head;
    if (!(in >> head)) continue;

    // key = value
    std::string next;
    const auto mark = in.tellg();
    if (in >> next && next == "=") {
      std::vector<std::string> values;
      std::string v;
      while (in >> v) values.push_back(v);
      if (values.empty()) parse_fail(line, "missing value for '" + head + "'");
      auto one = [&]() -> const std::string& {
        if (values.size() != 1) parse_fail(line, "'" + head + "' takes one value");
        return values.front();
      };
      if (head == "video_id") {
        spec.video_id = one();
      } else if (head == "source") {
        const auto s = parse_source(one());
        if (!s) parse_fail(line, "unknown source '" + values.front() + "'");
        spec.source = *s;
      } else if (head == "image") {
        if (values.size() != 2) parse_fail(line, "image takes width height");
        spec.image = {static_cast<int>(parse_int(values[0], line)),
                      static_cast<int>(parse_int(values[1], line))};
      } else if (head == "intrinsics") {
        if (values.size() != 4) parse_fail(line, "intrinsics takes fx fy cx cy");
        try {
          spec.intrinsics = CameraIntrinsics(parse_double(values[0], line), parse_double(values[1], line),
                                             parse_double(values[2], line), parse_double(values[3], line));
        } catch (const Error& e) {
          parse_fail(line, e.what());
        }
        have_intrinsics = true;
      } else if (head == "frames") {
        spec.frames = static_cast<int>(parse_int(one(), line));
      } else if (head == "fps") {
        spec.fps = parse_double(one(), line);
      } else if (head == "tracks") {
        spec.num_tracks = static_cast<int>(parse_int(one(), line));
      } else if (head == "seed") {
        spec.seed = static_cast<std::uint64_t>(std::stoull(one()));
      } else if (head == "render_maps") {
        spec.render_maps = one() == "true" || one() == "1";
      } else {
        parse_fail(line, "unknown setting '" + head + "'");
      }
      continue;
    }
    in.clear();
    in.seekg(mark);

    AttributeReader attrs(parse_attributes(in, line), line);
    if (head == "camera_linear") {
      spec.camera.kind = CameraRig::Kind::Linear;
      spec.camera.position = attrs.point("position", Point3::Zero());
      spec.camera.velocity = attrs.point("velocity", Point3::Zero());
      spec.camera.yaw_deg = attrs.number("yaw", 0.0);
      spec.camera.yaw_rate_deg = attrs.number("yaw_rate", 0.0);
    } else if (head == "camera_orbit") {
      spec.camera.kind = CameraRig::Kind::Orbit;
      spec.camera.target = attrs.point("target", spec.camera.target);
      spec.camera.radius = attrs.number("radius", spec.camera.radius);
      spec.camera.start_deg = attrs.number("start", 0.0);
      spec.camera.rate_deg = attrs.number("rate", spec.camera.rate_deg);
      spec.camera.height = attrs.number("height", 0.0);
    } else if (head == "sphere" || head == "box" || head == "plane") {
      SceneObject obj;
      obj.id = static_cast<int>(attrs.number("id", static_cast<double>(spec.objects.size() + 1)));
      if (head == "sphere") {
        obj.shape.kind = Primitive::Kind::Sphere;
        obj.shape.radius = attrs.number("radius", 0.5);
        if (!(obj.shape.radius > 0.0)) parse_fail(line, "sphere radius must be positive");
      } else if (head == "box") {
        obj.shape.kind = Primitive::Kind::Box;
        obj.shape.half_extents = attrs.point("half", obj.shape.half_extents);
        if (!(obj.shape.half_extents.minCoeff() > 0.0)) parse_fail(line, "box extents must be positive");
      } else {
        obj.shape.kind = Primitive::Kind::Plane;
      }
      obj.motion = read_motion(attrs);
      if (head == "plane") {
        const double height = attrs.number("height", std::numeric_limits<double>::quiet_NaN());
        if (!std::isnan(height)) obj.motion.position = Point3(0, height, 0);
      }
      spec.objects.push_back(obj);
    } else {
      parse_fail(line, "unknown entry '" + head + "'");
    }
    attrs.finish();
  }

  if (!have_intrinsics) {
    const double f = 0.9375 * spec.image.width;
    spec.intrinsics = CameraIntrinsics(f, f, 0.5 * (spec.image.width - 1), 0.5 * (spec.image.height - 1));
  }
  require_spec(spec);
  return spec;
}

std::string format_scene_spec(const SceneSpec& spec) {
  std::string out;
  out += "video_id = " + spec.video_id + "\n";
  out += "source = " + std::string(to_string(spec.source)) + "\n";
  out += "image = " + std::to_string(spec.image.width) + " " + std::to_string(spec.image.height) + "\n";
  out += "intrinsics = " + fmt_double(spec.intrinsics.fx()) + " " + fmt_double(spec.intrinsics.fy()) +
         " " + fmt_double(spec.intrinsics.cx()) + " " + fmt_double(spec.intrinsics.cy()) + "\n";
  out += "frames = " + std::to_string(spec.frames) + "\n";
  out += "fps = " + fmt_double(spec.fps) + "\n";
  out += "tracks = " + std::to_string(spec.num_tracks) + "\n";
  out += "seed = " + std::to_string(spec.seed) + "\n";
  out += std::string("render_maps = ") + (spec.render_maps ? "true" : "false") + "\n";

  const CameraRig& c = spec.camera;
  if (c.kind == CameraRig::Kind::Linear) {
    out += "camera_linear position=" + fmt_point(c.position) + " velocity=" + fmt_point(c.velocity) +
           " yaw=" + fmt_double(c.yaw_deg) + " yaw_rate=" + fmt_double(c.yaw_rate_deg) + "\n";
  } else {
    out += "camera_orbit target=" + fmt_point(c.target) + " radius=" + fmt_double(c.radius) +
           " start=" + fmt_double(c.start_deg) + " rate=" + fmt_double(c.rate_deg) +
           " height=" + fmt_double(c.height) + "\n";
  }
  for (const auto& obj : spec.objects) {
    switch (obj.shape.kind) {
      case Primitive::Kind::Sphere:
        out += "sphere id=" + std::to_string(obj.id) + " radius=" + fmt_double(obj.shape.radius);
        break;
      case Primitive::Kind::Box:
        out += "box id=" + std::to_string(obj.id) + " half=" + fmt_point(obj.shape.half_extents);
        break;
      case Primitive::Kind::Plane:
        out += "plane id=" + std::to_string(obj.id);
        break;
    }
    out += motion_attributes(obj.motion) + "\n";
  }
  return out;
}

SceneSpec random_scene_spec(std::uint64_t seed, const RandomSceneOptions& options) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto signed_speed = [&](double lo, double hi) {
    return (uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * uniform(lo, hi);
  };

  SceneSpec spec;
  spec.video_id = options.video_id;
  spec.source = options.source;
  spec.image = options.image;
  const double f = 0.9375 * options.image.width;
  spec.intrinsics = CameraIntrinsics(f, f, 0.5 * (options.image.width - 1),
                                     0.5 * (options.image.height - 1));
  spec.frames = options.frames;
  spec.num_tracks = options.num_tracks;
  spec.fps = options.source == Source::DriveTrack ? 10.0 : 30.0;
  spec.seed = seed;

  spec.camera.kind = CameraRig::Kind::Linear;
  if (options.moving) {
    spec.camera.velocity = Point3(uniform(-0.01, 0.01), 0.0, uniform(0.0, 0.02));
    spec.camera.yaw_rate_deg = signed_speed(0.05, 0.3);
  }

  const double ground = 1.2;
  SceneObject plane;
  plane.id = 1;
  plane.shape.kind = Primitive::Kind::Plane;
  plane.motion.position = Point3(0, ground, 0);
  spec.objects.push_back(plane);

  const int count = std::uniform_int_distribution<int>(2, 4)(rng);
  for (int k = 0; k < count; ++k) {
    SceneObject obj;
    obj.id = k + 2;
    double reach = 0.0;  // farthest surface point from the object origin
    if (uniform(0.0, 1.0) < 0.5) {
      obj.shape.kind = Primitive::Kind::Sphere;
      obj.shape.radius = uniform(0.3, 0.8);
      reach = obj.shape.radius;
    } else {
      obj.shape.kind = Primitive::Kind::Box;
      obj.shape.half_extents = Point3(uniform(0.2, 0.6), uniform(0.2, 0.6), uniform(0.2, 0.6));
      reach = obj.shape.half_extents.norm();
    }
    const double lowest = ground - reach - 0.05;
    obj.motion.position = Point3(uniform(-1.5, 1.5), uniform(std::min(-0.8, lowest), lowest),
                                 uniform(4.0, 8.0));
    if (options.moving) {
      obj.motion.velocity = Point3(signed_speed(0.005, 0.02), 0.0, signed_speed(0.0, 0.015));
      obj.motion.spin_deg_per_frame = signed_speed(0.2, 2.0);
    }
    spec.objects.push_back(obj);
  }
  return spec;
}

}  // namespace tap3d
