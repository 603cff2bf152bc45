#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tap3d/annotation.hpp"
#include "tap3d/trackset.hpp"

namespace tap3d {

// A record is a directory holding one .npy file per field plus a manifest:
//
//   manifest.json          {"format", "video_id", "source", "fps", "image_size"}
//   tracks_xyz.npy         [T, Q, 3] float32 or float64, camera frame, meters
//   visibility.npy         [Q, T] bool
//   query_xyt.npy          [Q, 3] (x, y, frame)
//   camera_intrinsics.npy  [4] (fx, fy, cx, cy)
//
// Predictions use the same directory shape with only tracks_xyz.npy and
// visibility.npy required.

inline constexpr const char* kRecordFormat = "tap3d-record/1";

struct ReadOptions {
  bool validate = true;  ///< run validate() and throw ValidationFailed on violations
};

/// Throws BadMagic / BadHeader / UnsupportedDtype / TruncatedData from the
/// array layer, ShapeMismatch naming the offending field, ParseError for a bad
/// manifest, ValidationFailed and IoFailure.
GroundTruthRecord read_record(const std::filesystem::path& dir, const ReadOptions& options = {});

/// Validates first (ValidationFailed), then writes every field with the
/// record's storage precision. Creates the directory if needed.
void write_record(const GroundTruthRecord& record, const std::filesystem::path& dir);

PredictionRecord read_prediction(const std::filesystem::path& dir);
void write_prediction(const PredictionRecord& prediction, const std::filesystem::path& dir);

/// Per-frame label maps stored as one [T, H, W] array (int32, uint8 or bool).
std::vector<MaskMap> read_masks(const std::filesystem::path& file);
void write_masks(std::span<const MaskMap> masks, const std::filesystem::path& file);
/// Per-frame depth maps stored as one [T, H, W] float32 array.
void write_depth(std::span<const DepthMap> depth, const std::filesystem::path& file);

/// Sorted names of the subdirectories of root that contain a manifest.
std::vector<std::string> list_videos(const std::filesystem::path& root);

}  // namespace tap3d
