#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tap3d/rescaling.hpp"
#include "tap3d/trackset.hpp"

namespace tap3d {

/// Correctness radii. Pixel-adaptive radii are unprojected at the
/// ground-truth depth of every point; fixed radii are in meters.
class ThresholdFamily {
 public:
  enum class Kind { PixelAdaptive, FixedMetric };

  static ThresholdFamily pixel_adaptive(std::vector<double> pixels = {1, 2, 4, 8, 16});
  static ThresholdFamily fixed_metric(std::vector<double> meters = {0.01, 0.04, 0.16, 0.64, 2.56});

  Kind kind() const { return kind_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  ThresholdFamily(Kind kind, std::vector<double> values);
  Kind kind_;
  std::vector<double> values_;
};

/// Sums entering APD and AJ for a single threshold.
struct JaccardCounts {
  std::int64_t visible = 0;         ///< sum v
  std::int64_t within = 0;          ///< sum v * alpha
  std::int64_t true_positive = 0;   ///< sum v * v_hat * alpha
  std::int64_t false_positive = 0;  ///< sum (1 - v) * v_hat
  std::int64_t far_positive = 0;    ///< sum v * v_hat * (1 - alpha)

  double apd() const;
  double aj() const;
  JaccardCounts& operator+=(const JaccardCounts& other);
  bool operator==(const JaccardCounts&) const = default;
};

struct ThresholdScores {
  std::vector<double> per_threshold;
  double mean = 0.0;
};

/// Pixel error scaling applied before 2D thresholding.
struct PixelScale {
  double x = 1.0;
  double y = 1.0;

  static PixelScale native() { return {}; }
  /// TAPVid convention: errors measured on a 256 x 256 raster.
  static PixelScale normalized(const ImageSize& size, double raster = 256.0);
};

// Scoring kernels. Predictions must already be rescaled. APD ignores the
// predicted visibility entirely; OA ignores positions.
ThresholdScores apd3d(const GroundTruthRecord& gt, const PredictionRecord& pred,
                      const ThresholdFamily& family, FocalRule focal = FocalRule::GeometricMean);
ThresholdScores aj3d(const GroundTruthRecord& gt, const PredictionRecord& pred,
                     const ThresholdFamily& family, FocalRule focal = FocalRule::GeometricMean);
double occlusion_accuracy(const VisibilityArray& gt, const VisibilityArray& pred);

ThresholdScores apd2d(const TrackSet2D& gt, const TrackSet2D& pred,
                      std::span<const double> pixel_thresholds, PixelScale scale = {});
ThresholdScores aj2d(const TrackSet2D& gt, const TrackSet2D& pred,
                     std::span<const double> pixel_thresholds, PixelScale scale = {});

/// Per-threshold counts of a whole record (the sums of the APD / AJ formulas).
std::vector<JaccardCounts> count_3d(const GroundTruthRecord& gt, const PredictionRecord& pred,
                                    const ThresholdFamily& family,
                                    FocalRule focal = FocalRule::GeometricMean,
                                    std::span<const std::uint8_t> invalid_tracks = {});

struct MetricValues {
  double aj = 0.0;
  double apd = 0.0;
  double oa = 0.0;
  std::vector<double> aj_per_threshold;
  std::vector<double> apd_per_threshold;
};

MetricValues values_from_counts(std::span<const JaccardCounts> counts, double oa);
MetricValues mean_of(std::span<const MetricValues> values);

struct EvalConfig {
  RescaleMode::Kind rescale = RescaleMode::Kind::GlobalMedian;
  /// Tubelet radius override; when absent each video uses default_tau(source).
  std::optional<double> tau;
  ThresholdFamily family = ThresholdFamily::pixel_adaptive();
  FocalRule focal = FocalRule::GeometricMean;
  bool visible_only_median = false;
  /// Also compute the 2D metrics on projected tracks.
  bool with_2d = false;
  /// 2D errors in native pixels instead of the 256 x 256 raster.
  bool native_pixels = false;
  /// Pool counts across videos of a source instead of averaging per video.
  bool pooling = false;

  RescaleMode mode_for(Source source) const;
};

struct VideoScores {
  MetricValues values;
  std::optional<MetricValues> values_2d;
  /// Per-threshold counts summed over the video's scoring units.
  std::vector<JaccardCounts> counts;
  std::vector<JaccardCounts> counts_2d;
  double oa_sum = 0.0;
  std::int64_t oa_units = 0;
  int num_tracks = 0;
  int num_frames = 0;
  std::optional<double> global_factor;
  double tau = 0.0;
  std::vector<int> degenerate_tracks;
  int skipped_units = 0;
};

/// Rescale, then score one video. Throws NoVisiblePoints when the ground
/// truth has no visible point, AllDegenerate from median rescaling, and
/// ShapeMismatch when the prediction does not match the ground truth.
VideoScores evaluate_video(const GroundTruthRecord& gt, const PredictionRecord& pred,
                           const EvalConfig& config);

struct VideoResult {
  std::string video_id;
  Source source = Source::Synthetic;
  std::optional<VideoScores> scores;
  std::string error;  ///< set when scores is empty
  std::optional<ErrorCode> error_code;
};

struct SourceSummary {
  MetricValues values;
  std::optional<MetricValues> values_2d;
  int num_videos = 0;
};

struct MetricReport {
  EvalConfig config;
  std::map<std::string, VideoResult> per_video;
  std::map<std::string, SourceSummary> per_source;
  MetricValues overall;
  std::optional<MetricValues> overall_2d;
  int num_sources = 0;
  std::vector<std::string> diagnostics;
};

/// Per-source mean over videos (or pooled counts), then an equal-weight mean
/// over the sources present. Failed videos are listed in diagnostics only.
MetricReport aggregate(std::span<const VideoResult> results, const EvalConfig& config);

}  // namespace tap3d
