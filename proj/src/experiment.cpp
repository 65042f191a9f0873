#include "crosstrack/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "crosstrack/kitti_io.hpp"

namespace crosstrack::experiment {

namespace fs = std::filesystem;

fs::path Layout::calib(const std::string& seq) const { return root / "calib" / (seq + ".txt"); }
fs::path Layout::camera(const std::string& seq) const {
  return root / "det_camera" / (seq + ".txt");
}
fs::path Layout::lidar(const std::string& seq) const { return root / "det_lidar" / (seq + ".txt"); }
fs::path Layout::label(const std::string& seq) const { return root / "label" / (seq + ".txt"); }
fs::path Layout::faults(const std::string& seq) const { return root / "faults" / (seq + ".txt"); }
fs::path Layout::scores(const std::string& seq) const {
  return (scores_dir.empty() ? root / "scores" : scores_dir) / (seq + ".txt");
}
fs::path Layout::embeddings(const std::string& seq, Stream stream) const {
  return (embeddings_dir.empty() ? root / "embeddings" : embeddings_dir) /
         (seq + "." + std::string(to_string(stream)) + ".txt");
}

std::string sequence_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", index);
  return buf;
}

SequenceData from_scenario(const sim::Scenario& scenario, std::string name) {
  SequenceData seq;
  seq.name = std::move(name);
  seq.n_frames = scenario.n_frames;
  seq.calib = scenario.calib;
  seq.camera = scenario.camera_dets;
  seq.lidar = scenario.lidar_dets;
  seq.gt = scenario.gt_tracks;
  return seq;
}

void export_scenario(const sim::Scenario& scenario, const Layout& layout, const std::string& seq) {
  kitti::write_file_atomic(layout.calib(seq), kitti::write_calibration(scenario.calib));
  kitti::write_file_atomic(layout.camera(seq), kitti::write_camera_detections(scenario.camera_dets));
  kitti::write_file_atomic(layout.lidar(seq), kitti::write_lidar_detections(scenario.lidar_dets));
  kitti::write_file_atomic(layout.label(seq),
                           kitti::write_ground_truth(scenario.gt_tracks, scenario.calib));
  kitti::write_file_atomic(layout.faults(seq), kitti::write_fault_log(scenario.fault_log));
}

std::vector<std::string> list_sequences(const Layout& layout) {
  std::vector<std::string> out;
  const fs::path dir = layout.root / "det_lidar";
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::Io, "no det_lidar directory under " + layout.root.string());
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      out.push_back(entry.path().stem().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

SequenceData load_sequence(const Layout& layout, const std::string& seq) {
  SequenceData data;
  data.name = seq;
  const fs::path calib_path = layout.calib(seq);
  if (!fs::exists(calib_path)) {
    throw Error(ErrorCode::CalibrationMissing, "calibration file not found: " + calib_path.string());
  }
  data.calib = kitti::parse_calibration(kitti::read_file(calib_path));
  data.camera = kitti::parse_camera_detections(kitti::read_file(layout.camera(seq)));
  data.lidar = kitti::parse_lidar_detections(kitti::read_file(layout.lidar(seq)));
  if (fs::exists(layout.label(seq))) {
    data.gt = kitti::parse_ground_truth(kitti::read_file(layout.label(seq)));
  }
  if (fs::exists(layout.scores(seq))) {
    data.scores = affinity::FileScoresProvider::parse(kitti::read_file(layout.scores(seq)));
  }
  if (fs::exists(layout.embeddings(seq, Stream::camera))) {
    kitti::attach_embeddings(data.camera,
                             kitti::read_file(layout.embeddings(seq, Stream::camera)));
  }
  if (fs::exists(layout.embeddings(seq, Stream::lidar))) {
    kitti::attach_embeddings(data.lidar, kitti::read_file(layout.embeddings(seq, Stream::lidar)));
  }
  std::int64_t n = std::max(data.camera.size(), data.lidar.size());
  for (const auto& t : data.gt) {
    if (!t.boxes.empty()) n = std::max(n, t.boxes.back().first + 1);
  }
  data.n_frames = n;
  data.camera.resize(n);
  data.lidar.resize(n);
  return data;
}

namespace {

std::unique_ptr<affinity::SimilarityProvider> provider_for(affinity::ProviderKind kind,
                                                           const SequenceData& seq) {
  if (kind == affinity::ProviderKind::file_scores && seq.scores) {
    return std::make_unique<affinity::FileScoresProvider>(*seq.scores);
  }
  return affinity::make_provider(kind);
}

}  // namespace

std::vector<tracker::OutputFrame> run_sequence(const SequenceData& seq, const RunOptions& opts) {
  const auto camera_provider = provider_for(opts.camera_provider, seq);
  const auto lidar_provider = provider_for(opts.lidar_provider, seq);
  auto out = tracker::track_sequence(seq.camera, seq.lidar, seq.calib, *camera_provider,
                                     *lidar_provider, opts.cfg, opts.mask);
  out.resize(std::max<std::size_t>(out.size(), seq.n_frames));
  for (std::size_t f = 0; f < out.size(); ++f) out[f].frame = static_cast<std::int64_t>(f);
  return out;
}

eval::ClearReport evaluate(const SequenceData& seq, const std::vector<tracker::OutputFrame>& out,
                           double iou_thr) {
  const std::int64_t n = std::max<std::int64_t>(seq.n_frames, static_cast<std::int64_t>(out.size()));
  return eval::clear_mot(kitti::project_ground_truth(seq.gt, seq.calib),
                         kitti::output_trajectories(out), iou_thr, n);
}

std::vector<tracker::CaseMask> table_masks() {
  using tracker::CaseMask;
  return {CaseMask::lidar_baseline(), CaseMask::parse("a"), CaseMask::parse("ab"),
          CaseMask::parse("abc"), CaseMask::parse("abcd"), CaseMask::parse("abcde")};
}

std::vector<AblationRow> run_ablation(const std::vector<SequenceData>& suite,
                                      const RunOptions& base,
                                      const std::vector<tracker::CaseMask>& masks, double iou_thr) {
  std::vector<std::vector<eval::ClearReport>> reports(masks.size(),
                                                      std::vector<eval::ClearReport>(suite.size()));
  parallel_for(masks.size() * suite.size(), [&](std::size_t job) {
    const std::size_t m = job / suite.size();
    const std::size_t s = job % suite.size();
    RunOptions opts = base;
    opts.mask = masks[m];
    reports[m][s] = evaluate(suite[s], run_sequence(suite[s], opts), iou_thr);
  });
  std::vector<AblationRow> rows;
  for (std::size_t m = 0; m < masks.size(); ++m) {
    rows.push_back({masks[m].to_string(), masks[m], eval::combine(reports[m])});
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::string out = "streams  cases     MOTA      FP      FN    IDSW    FRAG    MT    ML\n";
  char buf[256];
  for (const auto& row : rows) {
    const auto& r = row.report;
    std::snprintf(buf, sizeof(buf), "%-8s %-8s %7.3f %7lld %7lld %7lld %7lld %5lld %5lld\n",
                  row.mask.lidar_only ? "L" : "C+L", row.mask.lidar_only ? "-" : row.label.c_str(),
                  100.0 * r.MOTA, static_cast<long long>(r.FP), static_cast<long long>(r.FN),
                  static_cast<long long>(r.IDSW), static_cast<long long>(r.FRAG),
                  static_cast<long long>(r.MT), static_cast<long long>(r.ML));
    out += buf;
  }
  return out;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<sim::Scenario> fault_suite(int count, int n_objects, int n_frames,
                                       const sim::FaultSpec& spec) {
  std::vector<sim::Scenario> suite(count);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    sim::FaultSpec s = spec;
    s.seed = spec.seed + i;
    suite[i] = sim::generate(n_objects, n_frames, s);
  });
  return suite;
}

sim::FaultSpec default_fault_spec(std::uint64_t seed) {
  sim::FaultSpec spec;
  spec.p_miss_cam = 0.1;
  spec.p_miss_lidar = 0.1;
  spec.p_miss_both = 0.03;
  spec.p_false_cam = 0.05;
  spec.p_false_lidar = 0.05;
  spec.pos_noise_px = 1.0;
  spec.pos_noise_m = 0.05;
  spec.seed = seed;
  return spec;
}

}  // namespace crosstrack::experiment
