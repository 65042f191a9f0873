#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "crosstrack/core.hpp"
#include "crosstrack/eval.hpp"
#include "crosstrack/sim.hpp"
#include "crosstrack/tracker.hpp"

// Text formats, one record per line, space separated, floats printed with
// six decimals. 3D locations in files follow the KITTI convention (bottom
// center of the box); in memory boxes hold the centroid.
//
//   camera detections   frame id type trunc occ alpha left top right bottom score
//   lidar detections    frame id type trunc occ alpha left top right bottom h w l x y z ry score
//   ground truth        frame id type trunc occ alpha left top right bottom h w l x y z ry
//   tracking results    frame id type trunc occ alpha left top right bottom h w l x y z ry score
//   calibration         "P2: <12 numbers>" and optional "image_size: <w> <h>"
//   fault log           frame gt_id kind          (gt_id -1 for false detections)
//   embeddings          frame det_id d v1 ... vd
//
// Detection `id` is -1 for real detector output; simulated files put the
// ground-truth id there for the oracle provider. Readers assign det_id as
// the running record index of the file.
namespace crosstrack::kitti {

inline constexpr std::string_view kObjectType = "Car";

std::string write_camera_detections(const FrameDetections& frames);
std::string write_lidar_detections(const FrameDetections& frames);
/// `n_frames` pads the result with empty frames; the result is never shorter
/// than the last frame present in the text.
FrameDetections parse_camera_detections(std::string_view text, std::int64_t n_frames = 0);
FrameDetections parse_lidar_detections(std::string_view text, std::int64_t n_frames = 0);

std::string write_ground_truth(const std::vector<sim::GroundTruthTrack>& tracks,
                               const Calibration& calib);
std::vector<sim::GroundTruthTrack> parse_ground_truth(std::string_view text);

std::string write_tracking(const std::vector<tracker::OutputFrame>& frames);
std::vector<tracker::OutputFrame> parse_tracking(std::string_view text);

std::string write_calibration(const Calibration& calib);
Calibration parse_calibration(std::string_view text);

std::string write_fault_log(const std::vector<sim::FaultRecord>& log);
std::vector<sim::FaultRecord> parse_fault_log(std::string_view text);

std::string write_embeddings(const FrameDetections& frames);
/// Attaches vectors to detections by det_id. Throws Parse on inconsistent
/// lengths, unknown ids or frame disagreement.
void attach_embeddings(FrameDetections& frames, std::string_view text);

/// Ground-truth boxes projected into the image for evaluation.
eval::Trajectories project_ground_truth(const std::vector<sim::GroundTruthTrack>& tracks,
                                        const Calibration& calib);
eval::Trajectories output_trajectories(const std::vector<tracker::OutputFrame>& frames);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace crosstrack::kitti
