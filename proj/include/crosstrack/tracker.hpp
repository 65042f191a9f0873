#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crosstrack/affinity.hpp"
#include "crosstrack/core.hpp"
#include "crosstrack/motion.hpp"

namespace crosstrack::tracker {

enum class TrackStatus { matched, unmatched_detection, unmatched_trajectory };

/// A per-stream trajectory.
///
/// `hits` counts consecutive frames with a real or cross-corrected
/// observation. When a track misses a frame the count is kept until the end
/// of that frame so cross correction can still test it; if the gap is not
/// bridged the count drops to zero.
struct Track {
  std::int64_t track_id = 0;
  Stream stream = Stream::camera;
  motion::KFState kf;
  int hits = 1;
  int time_since_update = 0;
  /// Consecutive frames without a detection from the track's own stream.
  /// Unlike time_since_update it is not reset by cross correction, which
  /// bounds how long two trajectories may carry each other on predictions
  /// alone.
  int frames_since_detection = 0;
  Detection last_detection;
  std::optional<std::int64_t> link_id;
  TrackStatus status = TrackStatus::unmatched_detection;
  std::int64_t birth_frame = 0;

  /// Current filter box. Valid for camera tracks only.
  BBox2D box2d() const;
  /// Current filter box. Valid for LiDAR tracks only.
  BBox3D box3d() const;
  /// Image-plane box: the filter box for camera tracks, the projected
  /// filter box for LiDAR tracks (nullopt when it leaves the image).
  std::optional<BBox2D> image_box(const Calibration& calib) const;
};

/// T / UD / UT for one stream. Each vector is kept sorted by track id.
struct StreamState {
  Stream stream = Stream::camera;
  std::vector<Track> matched;
  std::vector<Track> unmatched_dets;
  std::vector<Track> unmatched_trajs;
  std::int64_t next_frame = 0;
  std::int64_t next_track_id = 0;

  StreamState() = default;
  explicit StreamState(Stream s) : stream(s) {}

  std::size_t size() const {
    return matched.size() + unmatched_dets.size() + unmatched_trajs.size();
  }
  const Track* find(std::int64_t track_id) const;
  Track* find(std::int64_t track_id);
};

/// Which cross-correction cases run, and whether the output is fused or
/// taken straight from the LiDAR stream.
///   a: unmatched LiDAR detection promoted by a camera trajectory
///   b: unmatched LiDAR and camera detections promote each other
///   c: unmatched camera trajectory bridged by a LiDAR trajectory
///   d: unmatched LiDAR trajectory bridged by a camera trajectory
///   e: unmatched trajectories in both streams bridge each other
struct CaseMask {
  bool a = true;
  bool b = true;
  bool c = true;
  bool d = true;
  bool e = true;
  bool lidar_only = false;

  static CaseMask all() { return {}; }
  static CaseMask none() { return {false, false, false, false, false, false}; }
  /// Single-stream baseline: no cross correction, LiDAR matched tracks out.
  static CaseMask lidar_baseline() { return {false, false, false, false, false, true}; }

  /// Accepts "baseline"/"lidar", "none", or any subset of "abcde".
  static CaseMask parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const CaseMask&, const CaseMask&) = default;
};

struct OutputEntry {
  std::int64_t track_id = 0;
  BBox3D box3d;
  BBox2D box2d;
  double score = 0.0;
};

struct OutputFrame {
  std::int64_t frame = 0;
  std::vector<OutputEntry> entries;
};

using LinkSet = std::vector<std::pair<std::int64_t, std::int64_t>>;

/// Stage 1 for one stream: predict every prior track, build the gated cost
/// against the score-ordered detections, greedily associate, and
/// redistribute tracks over T / UD / UT.
StreamState ctg_step(const StreamState& state, std::span<const Detection> dets,
                     const affinity::SimilarityProvider& provider, const TrackerConfig& cfg);

/// Links LiDAR and camera matched trajectories by projected 2D IoU. Links
/// that are still valid persist; the rest are re-matched greedily.
/// Returns (lidar_id, camera_id) pairs.
LinkSet tr_prematch(StreamState& lidar, StreamState& camera, const Calibration& calib,
                    const TrackerConfig& cfg);

/// Promotes fresh unmatched LiDAR detections (cases a and b) and discards
/// unmatched detections that have gone max_age_N frames without support.
void tr_step1(StreamState& lidar, StreamState& camera, const Calibration& calib,
              const TrackerConfig& cfg, const CaseMask& mask = CaseMask::all());

/// Bridges single-stream gaps (cases d then c).
void tr_step2(StreamState& lidar, StreamState& camera, const Calibration& calib,
              const TrackerConfig& cfg, const CaseMask& mask = CaseMask::all());

/// Bridges simultaneous gaps away from the image border (case e) while
/// both trajectories have gone fewer than max_age_N frames without a
/// detection, then discards stale trajectories and closes unbridged gaps.
void tr_step3(StreamState& lidar, StreamState& camera, const Calibration& calib,
              const TrackerConfig& cfg, const CaseMask& mask = CaseMask::all());

/// LiDAR matched trajectories with camera support in T, UD or UT.
OutputFrame finalize_output(const StreamState& lidar, const StreamState& camera,
                            const Calibration& calib, const TrackerConfig& cfg,
                            const CaseMask& mask = CaseMask::all());

/// Online dual-stream tracker for one sequence.
class CrossTracker {
 public:
  CrossTracker(Calibration calib, const affinity::SimilarityProvider& camera_provider,
               const affinity::SimilarityProvider& lidar_provider, TrackerConfig cfg,
               CaseMask mask = CaseMask::all());

  /// Processes the next frame; detections must carry frame == next_frame().
  OutputFrame step(std::span<const Detection> camera_dets, std::span<const Detection> lidar_dets);

  std::int64_t next_frame() const { return lidar_.next_frame; }
  const StreamState& lidar() const { return lidar_; }
  const StreamState& camera() const { return camera_; }

 private:
  Calibration calib_;
  const affinity::SimilarityProvider* camera_provider_;
  const affinity::SimilarityProvider* lidar_provider_;
  TrackerConfig cfg_;
  CaseMask mask_;
  StreamState lidar_{Stream::lidar};
  StreamState camera_{Stream::camera};
};

/// Runs the full pipeline over a sequence; frame i of each input holds the
/// detections of frame i. Missing trailing frames count as empty.
std::vector<OutputFrame> track_sequence(const FrameDetections& camera_dets,
                                        const FrameDetections& lidar_dets,
                                        const Calibration& calib,
                                        const affinity::SimilarityProvider& camera_provider,
                                        const affinity::SimilarityProvider& lidar_provider,
                                        const TrackerConfig& cfg,
                                        const CaseMask& mask = CaseMask::all());

/// Throws InvalidInput describing the first violated structural invariant
/// (set partition, unique ids, stream tags, status consistency, counter signs).
void check_invariants(const StreamState& state);
/// Throws InvalidInput unless every link is mutual and names a live track.
void check_links(const StreamState& lidar, const StreamState& camera);

}  // namespace crosstrack::tracker
