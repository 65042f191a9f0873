#pragma once

// Shared drivers for tests that run the tracker on simulated scenarios.

#include <string>
#include <vector>

#include "crosstrack/affinity.hpp"
#include "crosstrack/eval.hpp"
#include "crosstrack/kitti_io.hpp"
#include "crosstrack/sim.hpp"
#include "crosstrack/tracker.hpp"

namespace crosstrack::testing {

inline constexpr double kEvalIou = 0.5;

inline std::vector<tracker::OutputFrame> run(const sim::Scenario& scn, const tracker::CaseMask& mask,
                                             const TrackerConfig& cfg = default_config()) {
  affinity::ZeroProvider zero;
  return tracker::track_sequence(scn.camera_dets, scn.lidar_dets, scn.calib, zero, zero, cfg, mask);
}

/// CLEAR-MOT restricted to one object over the scenario's fault window.
inline eval::ClearReport window_report(const sim::Scenario& scn,
                                       const std::vector<tracker::OutputFrame>& out) {
  const auto& w = *scn.window;
  auto in_window = [&w](const eval::Observation& o) {
    return o.frame >= w.eval_first && o.frame <= w.eval_last;
  };
  eval::Trajectories gt;
  for (const auto& o : kitti::project_ground_truth(scn.gt_tracks, scn.calib)) {
    if (o.id == w.gt_id && in_window(o)) gt.push_back(o);
  }
  eval::Trajectories hyp;
  for (const auto& o : kitti::output_trajectories(out)) {
    if (in_window(o)) hyp.push_back(o);
  }
  return eval::clear_mot(gt, hyp, kEvalIou, scn.n_frames);
}

inline eval::ClearReport full_report(const sim::Scenario& scn,
                                     const std::vector<tracker::OutputFrame>& out) {
  return eval::clear_mot(kitti::project_ground_truth(scn.gt_tracks, scn.calib),
                         kitti::output_trajectories(out), kEvalIou, scn.n_frames);
}

}  // namespace crosstrack::testing
