#include "tap3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tap3d {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Accumulates the APD / AJ sums for every threshold of a family at once.
class Counter3D {
 public:
  Counter3D(const ThresholdFamily& family, double focal)
      : pixel_adaptive_(family.kind() == ThresholdFamily::Kind::PixelAdaptive),
        deltas_(family.values()),
        focal_(focal),
        counts_(family.size()) {}

  void add(const Point3& gt, const Point3& pred, bool visible, bool predicted_visible,
           bool position_valid) {
    if (!visible) {
      if (predicted_visible) {
        for (auto& c : counts_) ++c.false_positive;
      }
      return;
    }
    const double dist = position_valid ? (pred - gt).norm() : kInfinity;
    for (std::size_t k = 0; k < deltas_.size(); ++k) {
      // Same operation order as delta3d_threshold().
      const double radius = pixel_adaptive_ ? gt.z() * deltas_[k] / focal_ : deltas_[k];
      const bool alpha = dist < radius;
      JaccardCounts& c = counts_[k];
      ++c.visible;
      c.within += alpha;
      if (predicted_visible) {
        c.true_positive += alpha;
        c.far_positive += !alpha;
      }
    }
  }

  const std::vector<JaccardCounts>& counts() const { return counts_; }

 private:
  bool pixel_adaptive_;
  const std::vector<double>& deltas_;
  double focal_;
  std::vector<JaccardCounts> counts_;
};

double track_oa(std::span<const std::uint8_t> gt, std::span<const std::uint8_t> pred) {
  std::int64_t match = 0;
  for (std::size_t t = 0; t < gt.size(); ++t) match += (gt[t] != 0) == (pred[t] != 0);
  return static_cast<double>(match) / static_cast<double>(gt.size());
}

std::int64_t total_visible(const VisibilityArray& v) {
  std::int64_t n = 0;
  for (auto flag : v.values()) n += flag != 0;
  return n;
}

ThresholdScores scores_from(std::span<const JaccardCounts> counts, bool jaccard) {
  ThresholdScores out;
  for (const auto& c : counts) {
    if (c.visible == 0) throw Error(ErrorCode::NoVisiblePoints, "no visible ground-truth point");
    out.per_threshold.push_back(jaccard ? c.aj() : c.apd());
  }
  double sum = 0.0;
  for (double v : out.per_threshold) sum += v;
  out.mean = out.per_threshold.empty() ? 0.0 : sum / static_cast<double>(out.per_threshold.size());
  return out;
}

std::vector<JaccardCounts> count_2d(const TrackSet2D& gt, const TrackSet2D& pred,
                                    std::span<const double> thresholds, PixelScale scale) {
  if (pred.num_tracks() != gt.num_tracks() || pred.num_frames() != gt.num_frames()) {
    throw Error(ErrorCode::DimensionMismatch, "2D prediction shape differs from ground truth");
  }
  std::vector<JaccardCounts> counts(thresholds.size());
  const Point2 s(scale.x, scale.y);
  for (int i = 0; i < gt.num_tracks(); ++i) {
    for (int t = 0; t < gt.num_frames(); ++t) {
      const bool v = gt.visibility.at(i, t) != 0;
      const bool vhat = pred.visibility.at(i, t) != 0;
      if (!v) {
        if (vhat) {
          for (auto& c : counts) ++c.false_positive;
        }
        continue;
      }
      const bool valid = gt.projected.at(i, t) && pred.projected.at(i, t);
      const double dist =
          valid ? (pred.xy.at(i, t) - gt.xy.at(i, t)).cwiseProduct(s).norm() : kInfinity;
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        const bool alpha = dist < thresholds[k];
        JaccardCounts& c = counts[k];
        ++c.visible;
        c.within += alpha;
        if (vhat) {
          c.true_positive += alpha;
          c.far_positive += !alpha;
        }
      }
    }
  }
  return counts;
}

void require_thresholds(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "threshold family is empty");
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
      throw Error(ErrorCode::InvalidArgument, "thresholds must be positive and finite");
    }
    if (k > 0 && !(values[k] > values[k - 1])) {
      throw Error(ErrorCode::InvalidArgument, "thresholds must be strictly increasing");
    }
  }
}

void accumulate(std::vector<JaccardCounts>& into, std::span<const JaccardCounts> from) {
  if (into.empty()) into.resize(from.size());
  for (std::size_t k = 0; k < from.size(); ++k) into[k] += from[k];
}

}  // namespace

ThresholdFamily::ThresholdFamily(Kind kind, std::vector<double> values)
    : kind_(kind), values_(std::move(values)) {
  require_thresholds(values_);
}

ThresholdFamily ThresholdFamily::pixel_adaptive(std::vector<double> pixels) {
  return ThresholdFamily(Kind::PixelAdaptive, std::move(pixels));
}

ThresholdFamily ThresholdFamily::fixed_metric(std::vector<double> meters) {
  return ThresholdFamily(Kind::FixedMetric, std::move(meters));
}

double JaccardCounts::apd() const {
  return visible == 0 ? 0.0 : static_cast<double>(within) / static_cast<double>(visible);
}

double JaccardCounts::aj() const {
  const std::int64_t denominator = visible + false_positive + far_positive;
  return denominator == 0 ? 0.0
                          : static_cast<double>(true_positive) / static_cast<double>(denominator);
}

JaccardCounts& JaccardCounts::operator+=(const JaccardCounts& other) {
  visible += other.visible;
  within += other.within;
  true_positive += other.true_positive;
  false_positive += other.false_positive;
  far_positive += other.far_positive;
  return *this;
}

PixelScale PixelScale::normalized(const ImageSize& size, double raster) {
  if (size.width <= 0 || size.height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "raster normalization needs a positive image size");
  }
  return {raster / size.width, raster / size.height};
}

std::vector<JaccardCounts> count_3d(const GroundTruthRecord& gt, const PredictionRecord& pred,
                                    const ThresholdFamily& family, FocalRule focal,
                                    std::span<const std::uint8_t> invalid_tracks) {
  if (!pred.tracks.same_shape(gt.num_tracks(), gt.num_frames()) ||
      !pred.visibility.same_shape(gt.num_tracks(), gt.num_frames())) {
    throw Error(ErrorCode::DimensionMismatch, "prediction shape differs from ground truth");
  }
  Counter3D counter(family, gt.intrinsics.focal_length(focal));
  for (int i = 0; i < gt.num_tracks(); ++i) {
    const bool valid =
        invalid_tracks.empty() || invalid_tracks[static_cast<std::size_t>(i)] == 0;
    for (int t = 0; t < gt.num_frames(); ++t) {
      counter.add(gt.tracks.at(i, t), pred.tracks.at(i, t), gt.visibility.at(i, t) != 0,
                  pred.visibility.at(i, t) != 0, valid);
    }
  }
  return counter.counts();
}

ThresholdScores apd3d(const GroundTruthRecord& gt, const PredictionRecord& pred,
                      const ThresholdFamily& family, FocalRule focal) {
  return scores_from(count_3d(gt, pred, family, focal), false);
}

ThresholdScores aj3d(const GroundTruthRecord& gt, const PredictionRecord& pred,
                     const ThresholdFamily& family, FocalRule focal) {
  return scores_from(count_3d(gt, pred, family, focal), true);
}

double occlusion_accuracy(const VisibilityArray& gt, const VisibilityArray& pred) {
  if (!pred.same_shape(gt.num_tracks(), gt.num_frames())) {
    throw Error(ErrorCode::DimensionMismatch, "visibility shapes differ");
  }
  if (gt.num_tracks() == 0 || gt.num_frames() == 0) {
    throw Error(ErrorCode::InvalidArgument, "occlusion accuracy of an empty set");
  }
  double sum = 0.0;
  for (int i = 0; i < gt.num_tracks(); ++i) sum += track_oa(gt.track(i), pred.track(i));
  return sum / gt.num_tracks();
}

ThresholdScores apd2d(const TrackSet2D& gt, const TrackSet2D& pred,
                      std::span<const double> pixel_thresholds, PixelScale scale) {
  require_thresholds(pixel_thresholds);
  return scores_from(count_2d(gt, pred, pixel_thresholds, scale), false);
}

ThresholdScores aj2d(const TrackSet2D& gt, const TrackSet2D& pred,
                     std::span<const double> pixel_thresholds, PixelScale scale) {
  require_thresholds(pixel_thresholds);
  return scores_from(count_2d(gt, pred, pixel_thresholds, scale), true);
}

MetricValues values_from_counts(std::span<const JaccardCounts> counts, double oa) {
  MetricValues out;
  out.oa = oa;
  for (const auto& c : counts) {
    out.aj_per_threshold.push_back(c.aj());
    out.apd_per_threshold.push_back(c.apd());
  }
  const double n = static_cast<double>(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out.aj += out.aj_per_threshold[k];
    out.apd += out.apd_per_threshold[k];
  }
  if (n > 0) {
    out.aj /= n;
    out.apd /= n;
  }
  return out;
}

MetricValues mean_of(std::span<const MetricValues> values) {
  MetricValues out;
  if (values.empty()) return out;
  const std::size_t k = values.front().aj_per_threshold.size();
  out.aj_per_threshold.assign(k, 0.0);
  out.apd_per_threshold.assign(k, 0.0);
  for (const auto& v : values) {
    if (v.aj_per_threshold.size() != k || v.apd_per_threshold.size() != k) {
      throw Error(ErrorCode::DimensionMismatch, "cannot average different threshold families");
    }
    out.aj += v.aj;
    out.apd += v.apd;
    out.oa += v.oa;
    for (std::size_t j = 0; j < k; ++j) {
      out.aj_per_threshold[j] += v.aj_per_threshold[j];
      out.apd_per_threshold[j] += v.apd_per_threshold[j];
    }
  }
  const double n = static_cast<double>(values.size());
  out.aj /= n;
  out.apd /= n;
  out.oa /= n;
  for (std::size_t j = 0; j < k; ++j) {
    out.aj_per_threshold[j] /= n;
    out.apd_per_threshold[j] /= n;
  }
  return out;
}

RescaleMode EvalConfig::mode_for(Source source) const {
  switch (rescale) {
    case RescaleMode::Kind::GlobalMedian: return RescaleMode::global_median();
    case RescaleMode::Kind::PerTrajectory: return RescaleMode::per_trajectory();
    case RescaleMode::Kind::LocalNeighborhood: break;
  }
  return RescaleMode::local_neighborhood(tau.value_or(default_tau(source)));
}

VideoScores evaluate_video(const GroundTruthRecord& gt, const PredictionRecord& pred,
                           const EvalConfig& config) {
  if (!pred.tracks.same_shape(gt.num_tracks(), gt.num_frames()) ||
      !pred.visibility.same_shape(gt.num_tracks(), gt.num_frames())) {
    throw Error(ErrorCode::ShapeMismatch,
                "prediction is [" + std::to_string(pred.num_frames()) + ", " +
                    std::to_string(pred.num_tracks()) + "] but ground truth is [" +
                    std::to_string(gt.num_frames()) + ", " + std::to_string(gt.num_tracks()) +
                    "] (frames, tracks)");
  }
  if (const auto problems = validate(pred, gt); !problems.empty()) {
    throw Error(ErrorCode::ValidationFailed,
                "prediction for '" + gt.video_id + "': " + problems.front().describe() +
                    (problems.size() > 1 ? " (+" + std::to_string(problems.size() - 1) + " more)" : ""));
  }
  if (total_visible(gt.visibility) == 0) {
    throw Error(ErrorCode::NoVisiblePoints, "video '" + gt.video_id + "' has no visible point");
  }

  const RescaleMode mode = config.mode_for(gt.source);
  const RescaledPrediction rescaled =
      apply_rescale(gt, pred, mode, {.visible_only_median = config.visible_only_median});

  VideoScores out;
  out.num_tracks = gt.num_tracks();
  out.num_frames = gt.num_frames();
  out.global_factor = rescaled.global_factor;
  out.tau = mode.kind() == RescaleMode::Kind::LocalNeighborhood ? mode.tau() : 0.0;
  for (int i = 0; i < gt.num_tracks(); ++i) {
    if (rescaled.degenerate_tracks[static_cast<std::size_t>(i)]) out.degenerate_tracks.push_back(i);
  }

  const double focal = gt.intrinsics.focal_length(config.focal);
  const PredictionRecord& scaled = rescaled.prediction;

  if (mode.kind() != RescaleMode::Kind::LocalNeighborhood) {
    out.counts = count_3d(gt, scaled, config.family, config.focal, rescaled.degenerate_tracks);
    for (int i = 0; i < gt.num_tracks(); ++i) {
      out.oa_sum += track_oa(gt.visibility.track(i), pred.visibility.track(i));
    }
    out.oa_units = gt.num_tracks();
    out.values = values_from_counts(out.counts, out.oa_sum / static_cast<double>(out.oa_units));
  } else {
    std::vector<MetricValues> per_unit;
    per_unit.reserve(rescaled.tubelets.size());
    for (const auto& unit : rescaled.tubelets) {
      if (!unit.scale) out.degenerate_tracks.push_back(unit.tubelet.anchor);
      Counter3D counter(config.family, focal);
      std::int64_t match = 0;
      for (const auto& m : unit.tubelet.members) {
        const bool v = gt.visibility.at(m.track, m.frame) != 0;
        const bool vhat = pred.visibility.at(m.track, m.frame) != 0;
        match += v == vhat;
        const Point3 p = unit.scale ? Point3(*unit.scale * pred.tracks.at(m.track, m.frame))
                                    : Point3::Zero();
        counter.add(gt.tracks.at(m.track, m.frame), p, v, vhat, unit.scale.has_value());
      }
      const auto& counts = counter.counts();
      if (counts.empty() || counts.front().visible == 0) {
        ++out.skipped_units;
        continue;
      }
      const double oa = static_cast<double>(match) /
                        static_cast<double>(unit.tubelet.members.size());
      accumulate(out.counts, counts);
      out.oa_sum += oa;
      ++out.oa_units;
      per_unit.push_back(values_from_counts(counts, oa));
    }
    if (per_unit.empty()) {
      throw Error(ErrorCode::NoVisiblePoints, "no tubelet of '" + gt.video_id + "' is visible");
    }
    out.values = mean_of(per_unit);
  }

  if (config.with_2d) {
    const ThresholdFamily pixels = config.family.kind() == ThresholdFamily::Kind::PixelAdaptive
                                       ? config.family
                                       : ThresholdFamily::pixel_adaptive();
    const PixelScale scale =
        config.native_pixels ? PixelScale::native() : PixelScale::normalized(gt.raster_size());
    // Projection does not depend on a positive rescale, so raw predictions suffice.
    out.counts_2d = count_2d(to_2d(gt), to_2d(pred, gt.intrinsics), pixels.values(), scale);
    double oa_sum = 0.0;
    for (int i = 0; i < gt.num_tracks(); ++i) {
      oa_sum += track_oa(gt.visibility.track(i), pred.visibility.track(i));
    }
    out.values_2d = values_from_counts(out.counts_2d, oa_sum / gt.num_tracks());
  }
  return out;
}

MetricReport aggregate(std::span<const VideoResult> results, const EvalConfig& config) {
  MetricReport report;
  report.config = config;

  std::map<std::string, std::vector<const VideoScores*>> by_source;
  for (const auto& result : results) {
    if (report.per_video.count(result.video_id)) {
      report.diagnostics.push_back(result.video_id + ": duplicate video id, later entry ignored");
      continue;
    }
    report.per_video.emplace(result.video_id, result);
    if (!result.scores) {
      report.diagnostics.push_back(result.video_id + ": excluded: " + result.error);
      continue;
    }
    const VideoScores& s = *result.scores;
    if (!s.degenerate_tracks.empty()) {
      report.diagnostics.push_back(result.video_id + ": " +
                                   std::to_string(s.degenerate_tracks.size()) +
                                   " track(s) with degenerate query prediction scored incorrect");
    }
    by_source[std::string(to_string(result.source))].push_back(&s);
  }

  std::vector<MetricValues> source_values;
  std::vector<MetricValues> source_values_2d;
  bool all_2d = true;
  for (const auto& [name, videos] : by_source) {
    SourceSummary summary;
    summary.num_videos = static_cast<int>(videos.size());
    const bool has_2d =
        std::all_of(videos.begin(), videos.end(), [](const VideoScores* v) { return v->values_2d.has_value(); });
    if (config.pooling) {
      std::vector<JaccardCounts> counts;
      std::vector<JaccardCounts> counts_2d;
      double oa_sum = 0.0;
      std::int64_t oa_units = 0;
      for (const VideoScores* v : videos) {
        accumulate(counts, v->counts);
        if (has_2d) accumulate(counts_2d, v->counts_2d);
        oa_sum += v->oa_sum;
        oa_units += v->oa_units;
      }
      const double oa = oa_sum / static_cast<double>(oa_units);
      summary.values = values_from_counts(counts, oa);
      if (has_2d) summary.values_2d = values_from_counts(counts_2d, oa);
    } else {
      std::vector<MetricValues> vals;
      std::vector<MetricValues> vals_2d;
      for (const VideoScores* v : videos) {
        vals.push_back(v->values);
        if (has_2d) vals_2d.push_back(*v->values_2d);
      }
      summary.values = mean_of(vals);
      if (has_2d) summary.values_2d = mean_of(vals_2d);
    }
    source_values.push_back(summary.values);
    if (summary.values_2d) {
      source_values_2d.push_back(*summary.values_2d);
    } else {
      all_2d = false;
    }
    report.per_source.emplace(name, std::move(summary));
  }

  report.num_sources = static_cast<int>(source_values.size());
  if (source_values.empty()) {
    report.diagnostics.push_back("no video could be scored");
  } else {
    report.overall = mean_of(source_values);
    if (all_2d) report.overall_2d = mean_of(source_values_2d);
  }
  return report;
}

}  // namespace tap3d
