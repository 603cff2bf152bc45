#include "tap3d/record_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tap3d/npy.hpp"

namespace tap3d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string shape_text(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k > 0) s += ", ";
    s += std::to_string(shape[k]);
  }
  return s + "]";
}

void expect_shape(const std::string& field, const npy::Array& a, const std::vector<std::size_t>& want) {
  if (a.shape != want) {
    throw Error(ErrorCode::ShapeMismatch,
                field + " has shape " + shape_text(a.shape) + ", expected " + shape_text(want));
  }
}

npy::Array read_field(const fs::path& dir, const std::string& field) {
  const fs::path file = dir / (field + ".npy");
  if (!fs::exists(file)) throw Error(ErrorCode::IoFailure, "missing " + file.string());
  return npy::read(file);
}

FloatStorage storage_of(const std::string& field, const npy::Array& a) {
  if (a.dtype == npy::DType::Float32) return FloatStorage::Float32;
  if (a.dtype == npy::DType::Float64) return FloatStorage::Float64;
  throw Error(ErrorCode::UnsupportedDtype, field + " must be float32 or float64, got " + npy::descr(a.dtype));
}

npy::Array float_array(FloatStorage storage, std::vector<std::size_t> shape, std::span<const double> v) {
  return storage == FloatStorage::Float32 ? npy::make_float32(std::move(shape), v)
                                          : npy::make_float64(std::move(shape), v);
}

// [T, Q, 3] on disk, track-major in memory.
TrackArray tracks_from(const std::string& field, const npy::Array& a) {
  if (a.shape.size() != 3 || a.shape[2] != 3) {
    throw Error(ErrorCode::ShapeMismatch, field + " has shape " + shape_text(a.shape) + ", expected [T, Q, 3]");
  }
  storage_of(field, a);
  const int frames = static_cast<int>(a.shape[0]);
  const int q = static_cast<int>(a.shape[1]);
  const auto v = npy::to_float64(a);
  TrackArray out(q, frames);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < q; ++i) {
      const std::size_t k = (static_cast<std::size_t>(t) * q + i) * 3;
      out.at(i, t) = Point3(v[k], v[k + 1], v[k + 2]);
    }
  }
  return out;
}

npy::Array tracks_to(const TrackArray& tracks, FloatStorage storage) {
  const int frames = tracks.num_frames();
  const int q = tracks.num_tracks();
  std::vector<double> v(static_cast<std::size_t>(frames) * q * 3);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < q; ++i) {
      const std::size_t k = (static_cast<std::size_t>(t) * q + i) * 3;
      const Point3& p = tracks.at(i, t);
      v[k] = p.x();
      v[k + 1] = p.y();
      v[k + 2] = p.z();
    }
  }
  return float_array(storage, {static_cast<std::size_t>(frames), static_cast<std::size_t>(q), 3}, v);
}

VisibilityArray visibility_from(const npy::Array& a, int q, int frames) {
  expect_shape("visibility", a, {static_cast<std::size_t>(q), static_cast<std::size_t>(frames)});
  if (a.dtype != npy::DType::Bool && a.dtype != npy::DType::UInt8) {
    throw Error(ErrorCode::UnsupportedDtype, "visibility must be bool or uint8, got " + npy::descr(a.dtype));
  }
  VisibilityArray out(q, frames);
  out.values() = npy::to_flags(a);
  return out;
}

npy::Array visibility_to(const VisibilityArray& v) {
  return npy::make_bool({static_cast<std::size_t>(v.num_tracks()), static_cast<std::size_t>(v.num_frames())},
                        v.values());
}

json read_manifest(const fs::path& dir) {
  const fs::path file = dir / "manifest.json";
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::IoFailure, "missing " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, file.string() + ": " + e.what());
  }
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + file.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + file.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

std::string violations_text(const std::vector<Violation>& violations) {
  std::ostringstream s;
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t k = 0; k < shown; ++k) s << (k ? "; " : "") << violations[k].describe();
  if (violations.size() > shown) s << "; +" << violations.size() - shown << " more";
  return s.str();
}

}  // namespace

GroundTruthRecord read_record(const fs::path& dir, const ReadOptions& options) {
  const json manifest = read_manifest(dir);
  GroundTruthRecord r;
  try {
    if (manifest.value("format", std::string()) != kRecordFormat) {
      throw Error(ErrorCode::ParseError, "manifest format is not " + std::string(kRecordFormat));
    }
    r.video_id = manifest.at("video_id").get<std::string>();
    const auto source_name = manifest.at("source").get<std::string>();
    const auto source = parse_source(source_name);
    if (!source) throw Error(ErrorCode::ParseError, "unknown source '" + source_name + "'");
    r.source = *source;
    r.fps = manifest.at("fps").get<double>();
    if (manifest.contains("image_size") && !manifest["image_size"].is_null()) {
      const auto& size = manifest["image_size"];
      r.image_size = ImageSize{size.at(0).get<int>(), size.at(1).get<int>()};
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, (dir / "manifest.json").string() + ": " + e.what());
  }

  const auto tracks = read_field(dir, "tracks_xyz");
  r.tracks = tracks_from("tracks_xyz", tracks);
  r.storage.tracks = storage_of("tracks_xyz", tracks);
  const int q = r.tracks.num_tracks();
  const int frames = r.tracks.num_frames();

  r.visibility = visibility_from(read_field(dir, "visibility"), q, frames);

  const auto queries = read_field(dir, "query_xyt");
  expect_shape("query_xyt", queries, {static_cast<std::size_t>(q), 3});
  r.storage.queries = storage_of("query_xyt", queries);
  const auto qv = npy::to_float64(queries);
  for (int i = 0; i < q; ++i) {
    const double t = qv[3 * i + 2];
    if (!(std::isfinite(t) && t == std::floor(t) && std::abs(t) < 1e9)) {
      throw Error(ErrorCode::ValidationFailed,
                  "query_xyt frame of track " + std::to_string(i) + " is not an integer");
    }
    r.queries.push_back({qv[3 * i], qv[3 * i + 1], static_cast<int>(t)});
  }

  const auto intr = read_field(dir, "camera_intrinsics");
  expect_shape("camera_intrinsics", intr, {4});
  r.storage.intrinsics = storage_of("camera_intrinsics", intr);
  const auto iv = npy::to_float64(intr);
  try {
    r.intrinsics = CameraIntrinsics(iv[0], iv[1], iv[2], iv[3]);
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationFailed, std::string("camera_intrinsics: ") + e.what());
  }

  if (options.validate) {
    const auto problems = validate(r);
    if (!problems.empty()) {
      throw Error(ErrorCode::ValidationFailed, dir.filename().string() + ": " + violations_text(problems));
    }
  }
  return r;
}

void write_record(const GroundTruthRecord& record, const fs::path& dir) {
  const auto problems = validate(record);
  if (!problems.empty()) throw Error(ErrorCode::ValidationFailed, violations_text(problems));
  ensure_dir(dir);

  json manifest = {{"format", kRecordFormat},
                   {"video_id", record.video_id},
                   {"source", std::string(to_string(record.source))},
                   {"fps", record.fps},
                   {"image_size", nullptr}};
  if (record.image_size) manifest["image_size"] = {record.image_size->width, record.image_size->height};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  npy::write(dir / "tracks_xyz.npy", tracks_to(record.tracks, record.storage.tracks));
  npy::write(dir / "visibility.npy", visibility_to(record.visibility));

  std::vector<double> qv;
  qv.reserve(record.queries.size() * 3);
  for (const auto& query : record.queries) {
    qv.insert(qv.end(), {query.x, query.y, static_cast<double>(query.frame)});
  }
  npy::write(dir / "query_xyt.npy", float_array(record.storage.queries, {record.queries.size(), 3}, qv));

  const auto& k = record.intrinsics;
  const double iv[4] = {k.fx(), k.fy(), k.cx(), k.cy()};
  npy::write(dir / "camera_intrinsics.npy", float_array(record.storage.intrinsics, {4}, iv));
}

PredictionRecord read_prediction(const fs::path& dir) {
  PredictionRecord p;
  const auto tracks = read_field(dir, "tracks_xyz");
  p.tracks = tracks_from("tracks_xyz", tracks);
  p.storage = storage_of("tracks_xyz", tracks);
  p.visibility = visibility_from(read_field(dir, "visibility"), p.num_tracks(), p.num_frames());
  return p;
}

void write_prediction(const PredictionRecord& prediction, const fs::path& dir) {
  if (!prediction.visibility.same_shape(prediction.num_tracks(), prediction.num_frames())) {
    throw Error(ErrorCode::ShapeMismatch, "prediction visibility does not match its tracks");
  }
  ensure_dir(dir);
  npy::write(dir / "tracks_xyz.npy", tracks_to(prediction.tracks, prediction.storage));
  npy::write(dir / "visibility.npy", visibility_to(prediction.visibility));
}

std::vector<MaskMap> read_masks(const fs::path& file) {
  const auto a = npy::read(file);
  if (a.shape.size() != 3) {
    throw Error(ErrorCode::ShapeMismatch, "masks have shape " + shape_text(a.shape) + ", expected [T, H, W]");
  }
  const auto v = npy::to_int32(a);
  const int frames = static_cast<int>(a.shape[0]);
  const int h = static_cast<int>(a.shape[1]);
  const int w = static_cast<int>(a.shape[2]);
  std::vector<MaskMap> out;
  out.reserve(static_cast<std::size_t>(frames));
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (int t = 0; t < frames; ++t) {
    MaskMap m(w, h);
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(plane * t), plane, m.values().begin());
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

template <typename T>
std::vector<std::size_t> stack_shape(std::span<const Image<T>> maps) {
  if (maps.empty()) return {0, 0, 0};
  const ImageSize size = maps.front().size();
  for (const auto& m : maps) {
    if (m.size() != size) throw Error(ErrorCode::DimensionMismatch, "maps differ in size");
  }
  return {maps.size(), static_cast<std::size_t>(size.height), static_cast<std::size_t>(size.width)};
}

}  // namespace

void write_masks(std::span<const MaskMap> masks, const fs::path& file) {
  auto shape = stack_shape(masks);
  std::vector<std::int32_t> v;
  for (const auto& m : masks) v.insert(v.end(), m.values().begin(), m.values().end());
  npy::write(file, npy::make_int32(std::move(shape), v));
}

void write_depth(std::span<const DepthMap> depth, const fs::path& file) {
  auto shape = stack_shape(depth);
  std::vector<double> v;
  for (const auto& m : depth) v.insert(v.end(), m.values().begin(), m.values().end());
  npy::write(file, npy::make_float32(std::move(shape), v));
}

std::vector<std::string> list_videos(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorCode::IoFailure, root.string() + " is not a directory");
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace tap3d
