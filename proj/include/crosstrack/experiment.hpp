#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crosstrack/affinity.hpp"
#include "crosstrack/eval.hpp"
#include "crosstrack/sim.hpp"
#include "crosstrack/tracker.hpp"

namespace crosstrack::experiment {

/// Directory layout of a dataset root, one file per sequence:
///   calib/<seq>.txt  det_camera/<seq>.txt  det_lidar/<seq>.txt
///   label/<seq>.txt  faults/<seq>.txt      scores/<seq>.txt
///   embeddings/<seq>.camera.txt            embeddings/<seq>.lidar.txt
///
/// `scores_dir` / `embeddings_dir` relocate the optional affinity inputs;
/// empty means the default subdirectory of root.
struct Layout {
  std::filesystem::path root;
  std::filesystem::path scores_dir;
  std::filesystem::path embeddings_dir;

  std::filesystem::path calib(const std::string& seq) const;
  std::filesystem::path camera(const std::string& seq) const;
  std::filesystem::path lidar(const std::string& seq) const;
  std::filesystem::path label(const std::string& seq) const;
  std::filesystem::path faults(const std::string& seq) const;
  std::filesystem::path scores(const std::string& seq) const;
  std::filesystem::path embeddings(const std::string& seq, Stream stream) const;
};

struct SequenceData {
  std::string name;
  std::int64_t n_frames = 0;
  Calibration calib;
  FrameDetections camera;
  FrameDetections lidar;
  std::vector<sim::GroundTruthTrack> gt;
  std::optional<affinity::FileScoresProvider> scores;
};

std::string sequence_name(int index);

SequenceData from_scenario(const sim::Scenario& scenario, std::string name);

void export_scenario(const sim::Scenario& scenario, const Layout& layout, const std::string& seq);

/// Sequences with a LiDAR detection file, sorted by name.
std::vector<std::string> list_sequences(const Layout& layout);

/// Throws CalibrationMissing naming the path when the calibration file is
/// absent; ground truth, scores and embeddings are optional.
SequenceData load_sequence(const Layout& layout, const std::string& seq);

struct RunOptions {
  TrackerConfig cfg = default_config();
  tracker::CaseMask mask = tracker::CaseMask::all();
  affinity::ProviderKind camera_provider = affinity::ProviderKind::zero;
  affinity::ProviderKind lidar_provider = affinity::ProviderKind::zero;
};

std::vector<tracker::OutputFrame> run_sequence(const SequenceData& seq, const RunOptions& opts);

eval::ClearReport evaluate(const SequenceData& seq, const std::vector<tracker::OutputFrame>& out,
                           double iou_thr);

struct AblationRow {
  std::string label;
  tracker::CaseMask mask;
  eval::ClearReport report;
};

/// Baseline, a, ab, abc, abcd, abcde.
std::vector<tracker::CaseMask> table_masks();

/// Runs and evaluates every mask on every sequence; reports are pooled
/// over sequences.
std::vector<AblationRow> run_ablation(const std::vector<SequenceData>& suite,
                                      const RunOptions& base,
                                      const std::vector<tracker::CaseMask>& masks, double iou_thr);

std::string format_ablation(const std::vector<AblationRow>& rows);

/// Runs fn(i) for i in [0, n) on a small worker pool. The first exception
/// thrown by any task is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Fault-suite generator used by the ablation experiments: `count`
/// sequences with seeds base_seed, base_seed + 1, ...
std::vector<sim::Scenario> fault_suite(int count, int n_objects, int n_frames,
                                       const sim::FaultSpec& spec);

/// Defaults of the synthetic ablation suite.
sim::FaultSpec default_fault_spec(std::uint64_t seed);

}  // namespace crosstrack::experiment
