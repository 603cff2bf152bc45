#include "cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "tap3d/filtering.hpp"
#include "tap3d/record_io.hpp"
#include "tap3d/report.hpp"
#include "tap3d/synthetic.hpp"

namespace tap3d::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("tap3d", sink);
  logger->set_pattern("[%l] %v");
  auto level = spdlog::level::warn;
  if (const char* env = std::getenv("TAP3D_LOG")) level = spdlog::level::from_str(env);
  logger->set_level(level);
  return logger;
}

// A path is either one record directory or a root holding several.
std::vector<fs::path> record_dirs(const fs::path& path) {
  if (fs::exists(path / "manifest.json")) return {path};
  std::vector<fs::path> out;
  for (const auto& name : list_videos(path)) out.push_back(path / name);
  if (out.empty()) throw Error(ErrorCode::IoFailure, "no record found under " + path.string());
  return out;
}

void write_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot create " + file.string());
  out << text;
}

void emit(const std::string& target, const std::string& text, std::ostream& out) {
  if (target.empty() || target == "-") {
    out << text;
  } else {
    write_file(target, text);
  }
}

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        fn(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// evaluate -----------------------------------------------------------------

struct EvaluateArgs {
  std::string gt;
  std::string pred;
  std::string out;
  std::string rescale = "median";
  std::optional<double> tau;
  std::string thresholds = "px";
  std::string focal = "gm";
  bool pooling = false;
  bool visible_only_median = false;
  bool with_2d = false;
  bool native_pixels = false;
  int jobs = 1;
};

EvalConfig to_config(const EvaluateArgs& a) {
  EvalConfig c;
  const std::map<std::string, RescaleMode::Kind> modes = {
      {"median", RescaleMode::Kind::GlobalMedian},
      {"per_track", RescaleMode::Kind::PerTrajectory},
      {"local", RescaleMode::Kind::LocalNeighborhood}};
  c.rescale = modes.at(a.rescale);
  if (a.tau) {
    RescaleMode::local_neighborhood(*a.tau);  // range check
    c.tau = a.tau;
  }
  c.family = a.thresholds == "px" ? ThresholdFamily::pixel_adaptive() : ThresholdFamily::fixed_metric();
  c.focal = a.focal == "fx" ? FocalRule::Horizontal : a.focal == "fy" ? FocalRule::Vertical : FocalRule::GeometricMean;
  c.pooling = a.pooling;
  c.visible_only_median = a.visible_only_median;
  c.with_2d = a.with_2d;
  c.native_pixels = a.native_pixels;
  return c;
}

int run_evaluate(const EvaluateArgs& a, std::ostream& out, spdlog::logger& log) {
  const EvalConfig config = to_config(a);
  const auto results = evaluate_directories(a.gt, a.pred, config, {a.jobs});
  if (results.empty()) throw Error(ErrorCode::IoFailure, "no record found under " + a.gt);
  int failures = 0;
  for (const auto& r : results) {
    if (r.scores) {
      log.info("{}: aj_3d {:.4f}", r.video_id, r.scores->values.aj);
    } else if (is_input_error(r)) {
      log.error("{}: {}", r.video_id, r.error);
      ++failures;
    } else {
      log.warn("{}: excluded: {}", r.video_id, r.error);
    }
  }
  const MetricReport report = aggregate(results, config);
  emit(a.out, report_json(report), out);
  return failures > 0 || report.num_sources == 0 ? 1 : 0;
}

// synth --------------------------------------------------------------------

struct SynthArgs {
  std::string spec;
  int random = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string pred_out;
  int tracks = 64;
  int frames = 30;
  int width = 160;
  int height = 120;
  std::string source = "Synthetic";
  bool still = false;
  bool maps = false;
  int oversample = 1;
  int jobs = 1;
};

SyntheticVideo synth_filtered(SceneSpec spec, int oversample) {
  if (oversample <= 1) return synth_scene(spec);
  // Draw extra tracks, drop flickering ones, keep the first survivors.
  const int wanted = spec.num_tracks;
  spec.num_tracks = wanted * oversample;
  SyntheticVideo video = synth_scene(spec);
  auto keep = flicker_filter(video.record.visibility);
  int kept = 0;
  for (auto& k : keep) {
    if (k && kept < wanted) {
      ++kept;
    } else {
      k = 0;
    }
  }
  video.record = select_tracks(video.record, keep);
  std::vector<int> objects;
  std::vector<Point3> points;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    objects.push_back(video.track_objects[i]);
    points.push_back(video.object_points[i]);
  }
  video.track_objects = std::move(objects);
  video.object_points = std::move(points);
  return video;
}

void store_video(const SyntheticVideo& video, const SynthArgs& a) {
  const fs::path dir = fs::path(a.out) / video.record.video_id;
  write_record(video.record, dir);
  if (!video.depth.empty()) {
    write_depth(video.depth, dir / "depth.npy");
    write_masks(video.segmentation, dir / "segmentation.npy");
  }
  if (!a.pred_out.empty()) {
    write_prediction({video.record.tracks, video.record.visibility, video.record.storage.tracks},
                     fs::path(a.pred_out) / video.record.video_id);
  }
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_synth(const SynthArgs& a, std::ostream& out, spdlog::logger& log) {
  std::vector<SceneSpec> specs;
  if (!a.spec.empty()) {
    specs.push_back(parse_scene_spec(read_text(a.spec)));
    if (a.maps) specs.back().render_maps = true;
  } else {
    const auto source = parse_source(a.source);
    if (!source) throw Error(ErrorCode::InvalidArgument, "unknown source '" + a.source + "'");
    for (int k = 0; k < a.random; ++k) {
      RandomSceneOptions o;
      o.num_tracks = a.tracks;
      o.frames = a.frames;
      o.image = {a.width, a.height};
      o.moving = !a.still;
      o.source = *source;
      o.video_id = fmt::format("synth_{:04d}", k);
      SceneSpec spec = random_scene_spec(a.seed + static_cast<std::uint64_t>(k), o);
      spec.render_maps = a.maps;
      specs.push_back(std::move(spec));
    }
  }
  parallel_for(specs.size(), a.jobs, [&](std::size_t k) {
    const SyntheticVideo video = synth_filtered(specs[k], a.oversample);
    store_video(video, a);
    log.info("wrote {} ({} tracks)", video.record.video_id, video.record.num_tracks());
  });
  out << specs.size() << " video(s) written to " << a.out << "\n";
  return 0;
}

// filter -------------------------------------------------------------------

struct FilterArgs {
  std::string in;
  std::string out;
  std::string masks;
  std::string report;
  FilterConfig config;
  bool drop_static = false;
};

json indices(const std::vector<std::uint8_t>& flags, bool value) {
  json j = json::array();
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if ((flags[i] != 0) == value) j.push_back(i);
  }
  return j;
}

int run_filter(const FilterArgs& a, std::ostream& out, spdlog::logger& log) {
  a.config.check();
  const GroundTruthRecord record = read_record(a.in);
  const auto n = static_cast<std::size_t>(record.num_tracks());

  const auto flicker = flicker_filter(record.visibility, a.config);
  std::vector<std::uint8_t> on_mask(n, 1);
  if (!a.masks.empty()) {
    const fs::path masks = fs::is_directory(a.masks) ? fs::path(a.masks) / "segmentation.npy" : fs::path(a.masks);
    on_mask = mask_containment_filter(to_2d(record), read_masks(masks), a.config);
  }
  std::vector<std::uint8_t> moving(n, 1);
  if (a.drop_static) {
    for (std::size_t i = 0; i < n; ++i) {
      moving[i] = !static_track_detector(record.tracks.track(static_cast<int>(i)), a.config);
    }
  }
  std::vector<std::uint8_t> keep(n);
  for (std::size_t i = 0; i < n; ++i) keep[i] = flicker[i] && on_mask[i] && moving[i];

  write_record(select_tracks(record, keep), a.out);
  const json report = {{"video_id", record.video_id},
                       {"num_tracks", n},
                       {"kept", indices(keep, true)},
                       {"dropped_flicker", indices(flicker, false)},
                       {"dropped_mask", indices(on_mask, false)},
                       {"dropped_static", indices(moving, false)}};
  const auto kept = report["kept"].size();
  log.info("{}: kept {} of {} tracks", record.video_id, kept, n);
  if (!a.report.empty()) emit(a.report, report.dump(2) + "\n", out);
  return 0;
}

// baseline / stats / validate ----------------------------------------------

int run_baseline(const std::string& in, const std::string& out_root, std::ostream& out, spdlog::logger& log) {
  const auto dirs = record_dirs(in);
  const bool single = dirs.size() == 1 && dirs.front() == fs::path(in);
  for (const auto& dir : dirs) {
    const GroundTruthRecord gt = read_record(dir);
    const fs::path target = single ? fs::path(out_root) : fs::path(out_root) / dir.filename();
    write_prediction(static_baseline(gt), target);
    log.info("static baseline for {} written to {}", gt.video_id, target.string());
  }
  out << dirs.size() << " prediction(s) written to " << out_root << "\n";
  return 0;
}

int run_stats(const std::string& in, const std::string& target, const FilterConfig& config,
              std::ostream& out) {
  config.check();
  json videos = json::object();
  std::int64_t total_tracks = 0;
  std::int64_t total_static = 0;
  double speed_sum = 0.0;
  std::vector<std::int64_t> histogram;
  std::vector<double> edges;
  for (const auto& dir : record_dirs(in)) {
    const GroundTruthRecord r = read_record(dir);
    const VelocityStats v = velocity_stats(r.tracks, r.fps);
    int still = 0;
    for (int i = 0; i < r.num_tracks(); ++i) still += static_track_detector(r.tracks.track(i), config);
    double mean = 0.0;
    for (double s : v.mean_speed) mean += s;
    speed_sum += mean;
    mean /= std::max(1, r.num_tracks());
    videos[r.video_id] = {{"source", to_string(r.source)},
                          {"num_tracks", r.num_tracks()},
                          {"num_frames", r.num_frames()},
                          {"static_tracks", still},
                          {"mean_speed", mean},
                          {"speed_histogram", v.histogram}};
    total_tracks += r.num_tracks();
    total_static += still;
    if (histogram.empty()) histogram.assign(v.histogram.size(), 0);
    for (std::size_t k = 0; k < histogram.size(); ++k) histogram[k] += v.histogram[k];
    edges = v.bin_edges;
  }
  const json report = {
      {"schema", "tap3d-stats/1"},
      {"videos", videos},
      {"overall",
       {{"num_tracks", total_tracks},
        {"static_tracks", total_static},
        {"static_fraction", total_tracks ? static_cast<double>(total_static) / total_tracks : 0.0},
        {"mean_speed", total_tracks ? speed_sum / total_tracks : 0.0},
        {"speed_bin_edges", edges},
        {"speed_histogram", histogram}}}};
  emit(target, report.dump(2) + "\n", out);
  return 0;
}

int run_validate(const std::string& in, std::ostream& out, spdlog::logger& log) {
  int bad = 0;
  for (const auto& dir : record_dirs(in)) {
    try {
      const GroundTruthRecord r = read_record(dir, {.validate = false});
      const auto problems = validate(r);
      if (problems.empty()) {
        out << "ok " << dir.filename().string() << "\n";
        continue;
      }
      ++bad;
      out << "invalid " << dir.filename().string() << " (" << problems.size() << " violations)\n";
      for (const auto& p : problems) log.error("{}: {}", dir.filename().string(), p.describe());
    } catch (const Error& e) {
      ++bad;
      out << "invalid " << dir.filename().string() << "\n";
      log.error("{}: {}", dir.filename().string(), e.what());
    }
  }
  return bad > 0 ? 1 : 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);

  CLI::App app{"Evaluation tools for 3D point tracking", "tap3d"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("-j,--jobs", jobs, "Worker threads for per-video work")->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate->add_option("--gt", ev.gt, "Ground-truth root (one record per subdirectory)")->required();
  evaluate->add_option("--pred", ev.pred, "Prediction root with matching subdirectories")->required();
  evaluate->add_option("-o,--out", ev.out, "Report file (default: stdout)");
  evaluate->add_option("--rescale", ev.rescale, "Scale alignment")
      ->check(CLI::IsMember({"median", "per_track", "local"}));
  evaluate->add_option("--tau", ev.tau, "Tubelet radius in meters for --rescale local");
  evaluate->add_option("--thresholds", ev.thresholds, "px: depth-adaptive pixel radii, metric: fixed radii")
      ->check(CLI::IsMember({"px", "metric"}));
  evaluate->add_option("--focal", ev.focal, "Focal length used for depth-adaptive radii")
      ->check(CLI::IsMember({"gm", "fx", "fy"}));
  evaluate->add_flag("--pooling", ev.pooling, "Pool counts across videos of a source");
  evaluate->add_flag("--visible-only-median", ev.visible_only_median, "Median over visible points only");
  evaluate->add_flag("--with-2d", ev.with_2d, "Also report 2D metrics");
  evaluate->add_flag("--native-pixels", ev.native_pixels, "2D errors in native pixels, not 256x256");
  evaluate->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate synthetic ground truth");
  auto* spec_opt = synth->add_option("--spec", sy.spec, "Scene description file")->check(CLI::ExistingFile);
  auto* random_opt = synth->add_option("--random", sy.random, "Number of random scenes")->check(CLI::PositiveNumber);
  spec_opt->excludes(random_opt);
  synth->add_option("--seed", sy.seed, "Seed of the first random scene");
  synth->add_option("-o,--out", sy.out, "Output root")->required();
  synth->add_option("--pred-out", sy.pred_out, "Also write the ground truth as predictions here");
  synth->add_option("--tracks", sy.tracks, "Tracks per random scene")->check(CLI::PositiveNumber);
  synth->add_option("--frames", sy.frames, "Frames per random scene")->check(CLI::Range(2, 100000));
  synth->add_option("--width", sy.width, "Image width")->check(CLI::PositiveNumber);
  synth->add_option("--height", sy.height, "Image height")->check(CLI::PositiveNumber);
  synth->add_option("--source", sy.source, "Source tag of random scenes");
  synth->add_flag("--static", sy.still, "Random scenes without camera or object motion");
  synth->add_flag("--maps", sy.maps, "Also write depth.npy and segmentation.npy");
  synth->add_option("--oversample", sy.oversample, "Draw K times the tracks and drop flickering ones")
      ->check(CLI::PositiveNumber);
  synth->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  FilterArgs fi;
  auto* filter = app.add_subcommand("filter", "Drop low-quality tracks from a record");
  filter->add_option("--in", fi.in, "Record directory")->required();
  filter->add_option("-o,--out", fi.out, "Filtered record directory")->required();
  filter->add_option("--masks", fi.masks, "[T, H, W] label array, or a directory with segmentation.npy");
  filter->add_option("--report", fi.report, "Write a JSON summary here ('-' for stdout)");
  filter->add_option("--flicker-fraction", fi.config.flicker_fraction, "Max visibility flips per frame");
  filter->add_option("--mask-fraction", fi.config.mask_fraction, "Min on-mask fraction");
  filter->add_flag("--whole-video", fi.config.mask_whole_video, "Count occluded frames for mask containment");
  filter->add_flag("--drop-static", fi.drop_static, "Also drop static tracks");
  filter->add_option("--static-epsilon", fi.config.static_epsilon, "Static track radius in meters");

  std::string base_in;
  std::string base_out;
  auto* baseline = app.add_subcommand("baseline", "Reference predictors");
  baseline->require_subcommand(1);
  auto* still = baseline->add_subcommand("static", "Hold the unprojected query point fixed");
  still->add_option("--gt", base_in, "Record or root of records")->required();
  still->add_option("-o,--out", base_out, "Prediction directory or root")->required();

  std::string stats_in;
  std::string stats_out;
  FilterConfig stats_config;
  auto* stats = app.add_subcommand("stats", "Static-track share and speed histograms");
  stats->add_option("--in", stats_in, "Record or root of records")->required();
  stats->add_option("-o,--out", stats_out, "Output JSON (default: stdout)");
  stats->add_option("--static-epsilon", stats_config.static_epsilon, "Static track radius in meters");

  std::string validate_in;
  auto* validate_cmd = app.add_subcommand("validate", "Check records against the schema invariants");
  validate_cmd->add_option("--in", validate_in, "Record or root of records")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n";
    const CLI::App* scope = &app;
    while (!scope->get_subcommands().empty()) scope = scope->get_subcommands().front();
    err << scope->help();
    return 2;
  }

  try {
    if (*evaluate) {
      ev.jobs = jobs;
      return run_evaluate(ev, out, *log);
    }
    if (*synth) {
      if (sy.spec.empty() && sy.random == 0) {
        err << "error: synth needs --spec or --random\n\n" << synth->help();
        return 2;
      }
      sy.jobs = jobs;
      return run_synth(sy, out, *log);
    }
    if (*filter) return run_filter(fi, out, *log);
    if (*still) return run_baseline(base_in, base_out, out, *log);
    if (*stats) return run_stats(stats_in, stats_out, stats_config, out);
    if (*validate_cmd) return run_validate(validate_in, out, *log);
  } catch (const Error& e) {
    log->error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace tap3d::cli
