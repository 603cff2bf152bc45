#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tap3d/metrics.hpp"

namespace tap3d {

inline constexpr const char* kReportSchema = "tap3d-report/1";

/// Pretty-printed JSON with sorted keys; identical inputs give identical bytes.
std::string report_json(const MetricReport& report);

struct BatchOptions {
  int jobs = 1;
};

/// Scores every video under gt_root against the same-named directory under
/// pred_root. Per-video failures become VideoResult errors; results come back
/// in list_videos order whatever the job count.
std::vector<VideoResult> evaluate_directories(const std::filesystem::path& gt_root,
                                              const std::filesystem::path& pred_root,
                                              const EvalConfig& config,
                                              const BatchOptions& options = {});

/// Errors that mean bad input rather than a video that simply cannot be scored.
bool is_input_error(const VideoResult& result);

}  // namespace tap3d
