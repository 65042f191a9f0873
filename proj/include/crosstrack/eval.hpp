#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crosstrack/core.hpp"

namespace crosstrack::eval {

/// One box of one trajectory at one frame, in image coordinates.
struct Observation {
  std::int64_t frame = 0;
  std::int64_t id = 0;
  BBox2D box;
};

/// Flat list of observations; order does not matter.
using Trajectories = std::vector<Observation>;

struct ClearReport {
  double MOTA = 1.0;
  std::int64_t FP = 0;
  std::int64_t FN = 0;
  std::int64_t IDSW = 0;
  std::int64_t FRAG = 0;
  std::int64_t MT = 0;
  std::int64_t PT = 0;
  std::int64_t ML = 0;
  std::int64_t TP = 0;
  std::int64_t total_gt = 0;
  std::int64_t gt_tracks = 0;
  double recall = 1.0;
  double precision = 1.0;

  /// Human-readable summary.
  std::string to_text() const;
  /// `key=value` lines, one metric per line, fixed order.
  std::string to_key_values() const;

  friend bool operator==(const ClearReport&, const ClearReport&) = default;
};

/// CLEAR-MOT over image-plane boxes. Each frame first keeps the previous
/// correspondence of every ground-truth object when it still overlaps by at
/// least iou_thr, then greedily pairs the rest by descending IoU (ties:
/// lower ground-truth id, then lower hypothesis id).
///
/// Frames run over [0, n_frames) when given, otherwise up to the last
/// ground-truth frame; hypothesis frames outside that range raise
/// FrameMismatch. A repeated id within a frame raises InvalidInput.
/// MT / ML use 80% / 20% coverage. With no ground truth MOTA counts errors
/// against a denominator of one.
ClearReport clear_mot(const Trajectories& gt, const Trajectories& hyp, double iou_thr,
                      std::optional<std::int64_t> n_frames = std::nullopt);

/// Sums counts over sequences and recomputes the ratios.
ClearReport combine(const std::vector<ClearReport>& reports);

}  // namespace crosstrack::eval
