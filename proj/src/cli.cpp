#include "crosstrack/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "crosstrack/experiment.hpp"
#include "crosstrack/kitti_io.hpp"

namespace crosstrack::cli {

namespace fs = std::filesystem;

LogLevel log_level_from_env() {
  const char* env = std::getenv("CROSSTRACK_LOG");
  if (env == nullptr) return LogLevel::warn;
  const std::string_view v(env);
  if (v == "error" || v == "0") return LogLevel::error;
  if (v == "info" || v == "2") return LogLevel::info;
  if (v == "debug" || v == "3") return LogLevel::debug;
  return LogLevel::warn;
}

namespace {

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err), level_(log_level_from_env()) {}

  void log(LogLevel level, const std::string& msg) {
    if (level > level_) return;
    static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
    std::lock_guard lock(mutex_);
    err_ << "[" << kNames[static_cast<int>(level)] << "] " << msg << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_;
  std::mutex mutex_;
};

/// Options shared by the commands that run the tracker.
struct TrackingOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string provider = "zero";
  std::string scores_dir;
  std::string embeddings_dir;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Tracker configuration file (key = value lines)");
    cmd->add_option("--set", overrides, "Configuration override key=value (repeatable)");
    cmd->add_option("--provider", provider, "Similarity provider for both streams")
        ->check(CLI::IsMember({"oracle", "file", "embed", "zero"}));
    cmd->add_option("--scores", scores_dir, "Directory of per-sequence similarity score files");
    cmd->add_option("--embeddings", embeddings_dir, "Directory of per-sequence embedding files");
  }

  TrackerConfig config() const {
    TrackerConfig cfg =
        config_path.empty() ? default_config()
                            : TrackerConfig::from_text(kitti::read_file(config_path));
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::InvalidConfig, "override '" + kv + "' must be key=value");
      }
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }

  experiment::RunOptions run_options() const {
    experiment::RunOptions opts;
    opts.cfg = config();
    opts.camera_provider = affinity::parse_provider_kind(provider);
    opts.lidar_provider = opts.camera_provider;
    return opts;
  }

  experiment::Layout layout(const std::string& root) const {
    return {root, scores_dir, embeddings_dir};
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> select_sequences(const experiment::Layout& layout,
                                          const std::string& requested) {
  return requested.empty() ? experiment::list_sequences(layout) : split_list(requested);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

/// Deterministic run description: no timestamps, no host data.
std::string manifest(const std::string& command,
                     const std::vector<std::pair<std::string, std::string>>& fields,
                     const std::optional<TrackerConfig>& cfg) {
  std::string out = "tool = " + std::string(kToolVersion) + "\ncommand = " + command + "\n";
  for (const auto& [k, v] : fields) out += k + " = " + v + "\n";
  if (cfg) out += "[config]\n" + cfg->to_text();
  return out;
}

std::vector<experiment::SequenceData> load_all(const experiment::Layout& layout,
                                               const std::vector<std::string>& names,
                                               Logger& log) {
  std::vector<experiment::SequenceData> data(names.size());
  experiment::parallel_for(names.size(), [&](std::size_t i) {
    data[i] = experiment::load_sequence(layout, names[i]);
    log.log(LogLevel::debug, "loaded " + names[i] + " (" + std::to_string(data[i].n_frames) +
                                 " frames)");
  });
  return data;
}

int cmd_track(const std::string& data_root, const std::string& out_dir,
              const std::string& sequences, const std::string& cases,
              const TrackingOptions& topts, std::ostream& out, Logger& log) {
  const auto layout = topts.layout(data_root);
  auto opts = topts.run_options();
  opts.mask = tracker::CaseMask::parse(cases);
  const auto names = select_sequences(layout, sequences);
  const auto data = load_all(layout, names, log);
  experiment::parallel_for(data.size(), [&](std::size_t i) {
    const auto result = experiment::run_sequence(data[i], opts);
    kitti::write_file_atomic(fs::path(out_dir) / (data[i].name + ".txt"),
                             kitti::write_tracking(result));
    log.log(LogLevel::info, "tracked " + data[i].name);
  });
  kitti::write_file_atomic(
      fs::path(out_dir) / "manifest.txt",
      manifest("track",
               {{"data", data_root},
                {"sequences", join(names)},
                {"cases", opts.mask.to_string()},
                {"camera_provider", std::string(affinity::to_string(opts.camera_provider))},
                {"lidar_provider", std::string(affinity::to_string(opts.lidar_provider))},
                {"scores", layout.scores_dir.string()},
                {"embeddings", layout.embeddings_dir.string()}},
               opts.cfg));
  out << "tracked " << names.size() << " sequence(s) into " << out_dir << '\n';
  return kExitOk;
}

struct SimOptions {
  std::uint64_t seed = 0;
  int count = 1;
  int objects = 5;
  int frames = 100;
  std::string scripted;
  sim::FaultSpec spec;
};

int cmd_sim(const std::string& out_dir, const SimOptions& so, const TrackingOptions& topts,
            std::ostream& out, Logger& log) {
  const experiment::Layout layout{out_dir, {}, {}};
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<sim::Scenario> scenarios;
  std::optional<TrackerConfig> cfg;
  if (!so.scripted.empty()) {
    cfg = topts.config();
    scenarios.push_back(sim::scripted_case(sim::parse_scripted_case(so.scripted), *cfg));
    fields.emplace_back("case", so.scripted);
  } else {
    sim::FaultSpec spec = so.spec;
    spec.seed = so.seed;
    scenarios = experiment::fault_suite(so.count, so.objects, so.frames, spec);
    fields = {{"seed", std::to_string(so.seed)},
              {"sequences", std::to_string(so.count)},
              {"objects", std::to_string(so.objects)},
              {"frames", std::to_string(so.frames)}};
    std::ostringstream s;
    s.precision(17);
    s << "p_miss_cam=" << spec.p_miss_cam << " p_miss_lidar=" << spec.p_miss_lidar
      << " p_miss_both=" << spec.p_miss_both << " p_false_cam=" << spec.p_false_cam
      << " p_false_lidar=" << spec.p_false_lidar << " pos_noise_px=" << spec.pos_noise_px
      << " pos_noise_m=" << spec.pos_noise_m << " boundary_exit=" << spec.boundary_exit;
    fields.emplace_back("faults", s.str());
  }
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    experiment::export_scenario(scenarios[i], layout, experiment::sequence_name(int(i)));
    log.log(LogLevel::info, "wrote sequence " + experiment::sequence_name(int(i)));
  }
  kitti::write_file_atomic(fs::path(out_dir) / "manifest.txt", manifest("sim", fields, cfg));
  out << "wrote " << scenarios.size() << " sequence(s) to " << out_dir << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& data_root, const std::string& results_dir,
             const std::string& sequences, const std::string& cases, double iou,
             const std::string& report_path, const TrackingOptions& topts, std::ostream& out,
             Logger& log) {
  const auto layout = topts.layout(data_root);
  const auto names = select_sequences(layout, sequences);
  if (!cases.empty()) {
    // Sweep: track each sequence under every listed mask, then evaluate.
    std::vector<tracker::CaseMask> masks;
    for (const auto& c : split_list(cases)) masks.push_back(tracker::CaseMask::parse(c));
    const auto rows =
        experiment::run_ablation(load_all(layout, names, log), topts.run_options(), masks, iou);
    const std::string table = experiment::format_ablation(rows);
    out << table;
    if (!report_path.empty()) kitti::write_file_atomic(report_path, table);
    return kExitOk;
  }
  if (results_dir.empty()) {
    throw Error(ErrorCode::InvalidInput, "eval needs --results or --cases");
  }
  std::vector<eval::ClearReport> reports;
  for (const auto& name : names) {
    const fs::path calib_path = layout.calib(name);
    if (!fs::exists(calib_path)) {
      throw Error(ErrorCode::CalibrationMissing,
                  "calibration file not found: " + calib_path.string());
    }
    const auto calib = kitti::parse_calibration(kitti::read_file(calib_path));
    const auto gt = kitti::parse_ground_truth(kitti::read_file(layout.label(name)));
    const auto hyp =
        kitti::parse_tracking(kitti::read_file(fs::path(results_dir) / (name + ".txt")));
    std::int64_t n = 0;
    for (const auto& t : gt) {
      if (!t.boxes.empty()) n = std::max(n, t.boxes.back().first + 1);
    }
    reports.push_back(eval::clear_mot(kitti::project_ground_truth(gt, calib),
                                      kitti::output_trajectories(hyp), iou, n));
    log.log(LogLevel::info, "evaluated " + name);
  }
  const auto total = eval::combine(reports);
  out << total.to_text();
  if (!report_path.empty()) kitti::write_file_atomic(report_path, total.to_key_values());
  return kExitOk;
}

int cmd_ablate(const std::string& data_root, const std::string& sequences, std::uint64_t seed,
               double iou, const std::string& report_path, const TrackingOptions& topts,
               std::ostream& out, Logger& log) {
  std::vector<experiment::SequenceData> suite;
  if (data_root.empty()) {
    log.log(LogLevel::info, "no --data given; generating the default fault suite");
    const auto scenarios = experiment::fault_suite(20, 5, 100, experiment::default_fault_spec(seed));
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      suite.push_back(experiment::from_scenario(scenarios[i], experiment::sequence_name(int(i))));
    }
  } else {
    const auto layout = topts.layout(data_root);
    suite = load_all(layout, select_sequences(layout, sequences), log);
  }
  const auto rows =
      experiment::run_ablation(suite, topts.run_options(), experiment::table_masks(), iou);
  const std::string table = experiment::format_ablation(rows);
  out << table;
  if (!report_path.empty()) kitti::write_file_atomic(report_path, table);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Logger log(err);
  CLI::App app{"Two-stage camera + LiDAR 3D multi-object tracker", "crosstrack"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string data_root;
  std::string out_dir;
  std::string sequences;
  std::string track_cases = "abcde";
  std::string eval_cases;
  std::string results_dir;
  std::string report_path;
  double iou = 0.5;
  TrackingOptions topts;
  SimOptions so;

  auto* track = app.add_subcommand("track", "Track every sequence of a dataset");
  track->add_option("--data", data_root, "Dataset root")->required();
  track->add_option("--out", out_dir, "Output directory for tracking results")->required();
  track->add_option("--sequences", sequences, "Comma-separated sequence names (default: all)");
  track->add_option("--cases", track_cases, "Cross-correction cases or 'baseline'");
  topts.add_to(track);

  auto* simc = app.add_subcommand("sim", "Generate synthetic sequences");
  simc->add_option("--out", out_dir, "Dataset root to write")->required();
  simc->add_option("--seed", so.seed, "Base seed; sequence i uses seed + i");
  simc->add_option("--sequences", so.count, "Number of sequences")->check(CLI::PositiveNumber);
  simc->add_option("--objects", so.objects, "Objects per sequence");
  simc->add_option("--frames", so.frames, "Frames per sequence");
  simc->add_option("--case", so.scripted, "Scripted scenario: a-e or boundary");
  simc->add_option("--p-miss-cam", so.spec.p_miss_cam);
  simc->add_option("--p-miss-lidar", so.spec.p_miss_lidar);
  simc->add_option("--p-miss-both", so.spec.p_miss_both);
  simc->add_option("--p-false-cam", so.spec.p_false_cam);
  simc->add_option("--p-false-lidar", so.spec.p_false_lidar);
  simc->add_option("--noise-px", so.spec.pos_noise_px);
  simc->add_option("--noise-m", so.spec.pos_noise_m);
  simc->add_flag("--boundary-exit", so.spec.boundary_exit, "Let objects leave the image");
  simc->add_option("--config", topts.config_path, "Tracker configuration (scripted cases)");
  simc->add_option("--set", topts.overrides, "Configuration override key=value");

  auto* evalc = app.add_subcommand("eval", "CLEAR-MOT evaluation");
  evalc->add_option("--data", data_root, "Dataset root with calib/ and label/")->required();
  evalc->add_option("--results", results_dir, "Directory of tracking result files");
  evalc->add_option("--sequences", sequences, "Comma-separated sequence names (default: all)");
  evalc->add_option("--cases", eval_cases, "Comma-separated masks to track and evaluate, e.g. a,ab");
  evalc->add_option("--iou", iou, "Matching IoU threshold")->check(CLI::Range(0.0, 1.0));
  evalc->add_option("--out", report_path, "Write a machine-readable report here");
  topts.add_to(evalc);

  auto* ablate = app.add_subcommand("ablate", "Baseline plus cumulative case masks");
  ablate->add_option("--data", data_root, "Dataset root (default: generated fault suite)");
  ablate->add_option("--sequences", sequences, "Comma-separated sequence names (default: all)");
  ablate->add_option("--seed", so.seed, "Seed of the generated fault suite");
  ablate->add_option("--iou", iou, "Matching IoU threshold")->check(CLI::Range(0.0, 1.0));
  ablate->add_option("--out", report_path, "Write the table here as well");
  topts.add_to(ablate);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o;
    std::ostringstream e_out;
    const int code = app.exit(e, o, e_out);
    out << o.str();
    err << e_out.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*track) return cmd_track(data_root, out_dir, sequences, track_cases, topts, out, log);
    if (*simc) return cmd_sim(out_dir, so, topts, out, log);
    if (*evalc) {
      return cmd_eval(data_root, results_dir, sequences, eval_cases, iou, report_path, topts, out, log);
    }
    if (*ablate) {
      return cmd_ablate(data_root, sequences, so.seed, iou, report_path, topts, out, log);
    }
  } catch (const Error& e) {
    log.log(LogLevel::error, e.what());
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    log.log(LogLevel::error, e.what());
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace crosstrack::cli
