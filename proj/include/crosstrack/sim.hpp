#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "crosstrack/core.hpp"

namespace crosstrack::sim {

/// Detection corruption applied independently per object and frame.
/// p_miss_both drops the object from both streams; otherwise the camera and
/// LiDAR misses are drawn independently. p_false_* are Poisson means of
/// false detections per frame.
struct FaultSpec {
  double p_miss_cam = 0.0;
  double p_miss_lidar = 0.0;
  double p_miss_both = 0.0;
  double p_false_cam = 0.0;
  double p_false_lidar = 0.0;
  double pos_noise_px = 0.0;
  double pos_noise_m = 0.0;
  bool boundary_exit = false;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class FaultKind { miss_camera, miss_lidar, miss_both, false_camera, false_lidar };

std::string_view to_string(FaultKind kind);
FaultKind parse_fault_kind(std::string_view text);

struct FaultRecord {
  std::int64_t frame = 0;
  std::optional<std::int64_t> gt_id;  // empty for false detections
  FaultKind kind = FaultKind::miss_camera;
  friend bool operator==(const FaultRecord&, const FaultRecord&) = default;
};

struct GroundTruthTrack {
  std::int64_t gt_id = 0;
  std::vector<std::pair<std::int64_t, BBox3D>> boxes;  // (frame, box), ascending frames
  friend bool operator==(const GroundTruthTrack&, const GroundTruthTrack&) = default;
};

/// For scripted scenarios: the object under test, the frames where the
/// single-stream baseline is expected to lose it, and the frames over which
/// the full tracker must hold it without a miss or identity switch.
struct FaultWindow {
  std::int64_t gt_id = 0;
  std::int64_t gap_first = 0;
  std::int64_t gap_last = 0;
  std::int64_t eval_first = 0;
  std::int64_t eval_last = 0;
  std::int64_t gap_length() const { return gap_last - gap_first + 1; }
  friend bool operator==(const FaultWindow&, const FaultWindow&) = default;
};

struct Scenario {
  std::int64_t n_frames = 0;
  std::vector<GroundTruthTrack> gt_tracks;
  FrameDetections camera_dets;
  FrameDetections lidar_dets;
  std::vector<FaultRecord> fault_log;
  Calibration calib;
  std::optional<FaultWindow> window;
};

bool operator==(const Scenario& a, const Scenario& b);

/// Objects drive along lanes in front of the camera with piecewise-constant
/// velocity. Throws InfeasibleScene when the lanes cannot hold n_objects.
Scenario generate(int n_objects, int n_frames, const FaultSpec& spec);

enum class ScriptedCase { a, b, c, d, e, boundary };

std::string_view to_string(ScriptedCase c);
ScriptedCase parse_scripted_case(std::string_view text);

/// Minimal noise-free single-object scenario that exercises exactly one
/// cross-correction case. Gaps are at most min(2, max_age_N) frames.
Scenario scripted_case(ScriptedCase which, const TrackerConfig& cfg);

/// Camera-frame centroid height of a box resting on the ground plane.
double ground_centroid_y(double height);

/// Number of lanes available to generate().
int lane_count();

}  // namespace crosstrack::sim
