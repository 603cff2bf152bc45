#include "tap3d/report.hpp"

#include <atomic>
#include <thread>

#include <json.hpp>

#include "tap3d/record_io.hpp"

namespace tap3d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view rescale_name(RescaleMode::Kind kind) {
  switch (kind) {
    case RescaleMode::Kind::GlobalMedian: return "median";
    case RescaleMode::Kind::PerTrajectory: return "per_track";
    case RescaleMode::Kind::LocalNeighborhood: return "local";
  }
  return "median";
}

std::string_view focal_name(FocalRule rule) {
  switch (rule) {
    case FocalRule::GeometricMean: return "geometric_mean";
    case FocalRule::Horizontal: return "fx";
    case FocalRule::Vertical: return "fy";
  }
  return "geometric_mean";
}

json config_json(const EvalConfig& c) {
  const bool pixels = c.family.kind() == ThresholdFamily::Kind::PixelAdaptive;
  return {{"rescale", rescale_name(c.rescale)},
          {"tau", c.tau ? json(*c.tau) : json(nullptr)},
          {"thresholds", pixels ? "px" : "metric"},
          {"threshold_values", c.family.values()},
          {"focal", focal_name(c.focal)},
          {"visible_only_median", c.visible_only_median},
          {"with_2d", c.with_2d},
          {"native_pixels", c.native_pixels},
          {"pooling", c.pooling}};
}

void put_values(json& j, const MetricValues& v, const std::string& suffix) {
  j["aj_" + suffix] = v.aj;
  j["apd_" + suffix] = v.apd;
  j["aj_" + suffix + "_per_threshold"] = v.aj_per_threshold;
  j["apd_" + suffix + "_per_threshold"] = v.apd_per_threshold;
}

json values_json(const MetricValues& v, const std::optional<MetricValues>& v2d) {
  json j = json::object();
  put_values(j, v, "3d");
  j["oa"] = v.oa;
  if (v2d) put_values(j, *v2d, "2d");
  return j;
}

json video_json(const VideoResult& r) {
  json j = json::object();
  j["source"] = to_string(r.source);
  if (!r.scores) {
    j["error"] = r.error;
    return j;
  }
  const VideoScores& s = *r.scores;
  j["metrics"] = values_json(s.values, s.values_2d);
  j["num_tracks"] = s.num_tracks;
  j["num_frames"] = s.num_frames;
  j["global_factor"] = s.global_factor ? json(*s.global_factor) : json(nullptr);
  j["tau"] = s.tau > 0.0 ? json(s.tau) : json(nullptr);
  j["degenerate_tracks"] = s.degenerate_tracks;
  j["skipped_units"] = s.skipped_units;
  return j;
}

VideoResult evaluate_one(const fs::path& gt_root, const fs::path& pred_root, const std::string& name,
                         const EvalConfig& config) {
  VideoResult result;
  result.video_id = name;
  try {
    const GroundTruthRecord gt = read_record(gt_root / name);
    result.video_id = gt.video_id;
    result.source = gt.source;
    const fs::path pred_dir = pred_root / name;
    if (!fs::is_directory(pred_dir)) throw Error(ErrorCode::IoFailure, "no prediction directory " + pred_dir.string());
    result.scores = evaluate_video(gt, read_prediction(pred_dir), config);
  } catch (const Error& e) {
    result.error = e.what();
    result.error_code = e.code();
  } catch (const std::exception& e) {
    result.error = e.what();
    result.error_code = ErrorCode::IoFailure;
  }
  return result;
}

}  // namespace

std::string report_json(const MetricReport& report) {
  json j = json::object();
  j["schema"] = kReportSchema;
  j["config"] = config_json(report.config);
  json overall = report.num_sources > 0 ? values_json(report.overall, report.overall_2d) : json::object();
  overall["num_sources"] = report.num_sources;
  j["overall"] = std::move(overall);

  json per_source = json::object();
  for (const auto& [name, summary] : report.per_source) {
    json s = values_json(summary.values, summary.values_2d);
    s["num_videos"] = summary.num_videos;
    per_source[name] = std::move(s);
  }
  j["per_source"] = std::move(per_source);

  json per_video = json::object();
  for (const auto& [id, result] : report.per_video) per_video[id] = video_json(result);
  j["per_video"] = std::move(per_video);
  j["diagnostics"] = report.diagnostics;
  return j.dump(2) + "\n";
}

std::vector<VideoResult> evaluate_directories(const fs::path& gt_root, const fs::path& pred_root,
                                              const EvalConfig& config, const BatchOptions& options) {
  const auto names = list_videos(gt_root);
  std::vector<VideoResult> results(names.size());
  const auto workers = static_cast<std::size_t>(std::max(1, options.jobs));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < names.size(); k = next++) {
      results[k] = evaluate_one(gt_root, pred_root, names[k], config);
    }
  };
  if (workers == 1 || names.size() < 2) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, names.size()); ++w) pool.emplace_back(work);
  }
  return results;
}

bool is_input_error(const VideoResult& result) {
  if (result.scores || !result.error_code) return false;
  switch (*result.error_code) {
    case ErrorCode::AllDegenerate:
    case ErrorCode::NoVisiblePoints: return false;
    default: return true;
  }
}

}  // namespace tap3d
