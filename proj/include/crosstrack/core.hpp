#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "crosstrack/error.hpp"

namespace crosstrack {

enum class Stream { camera, lidar };

std::string_view to_string(Stream stream);
Stream opposite(Stream stream);

/// Axis-aligned image box in pixels, origin at the top-left corner.
struct BBox2D {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;

  double width() const { return right - left; }
  double height() const { return bottom - top; }
  double area() const { return width() * height(); }
  double center_u() const { return 0.5 * (left + right); }
  double center_v() const { return 0.5 * (top + bottom); }

  bool valid() const;
  /// Throws Error(InvalidBox) unless valid().
  static BBox2D make(double left, double top, double right, double bottom);

  friend bool operator==(const BBox2D&, const BBox2D&) = default;
};

/// 3D box in the reference camera frame (x right, y down, z forward).
/// (x, y, z) is the geometric centroid, not the KITTI bottom-center.
struct BBox3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double l = 1.0;
  double w = 1.0;
  double h = 1.0;
  double yaw = 0.0;

  bool valid() const;
  static BBox3D make(double x, double y, double z, double l, double w, double h, double yaw);

  friend bool operator==(const BBox3D&, const BBox3D&) = default;
};

/// One sensor observation. Camera detections carry a 2D box, LiDAR
/// detections a 3D box (and optionally the 2D box reported by the detector).
///
/// `det_id` is an opaque identifier unique within a (sequence, stream);
/// the file readers assign it as the running line index. `truth_id` is only
/// set for simulated data and is consumed exclusively by the oracle
/// similarity provider. The embedding is never interpreted by the core.
struct Detection {
  std::int64_t frame = 0;
  Stream stream = Stream::camera;
  std::optional<BBox2D> box2d;
  std::optional<BBox3D> box3d;
  double score = 1.0;
  std::int64_t det_id = 0;
  std::optional<std::int64_t> truth_id;
  std::optional<std::vector<double>> embedding;

  /// Checks the stream/box pairing, box validity and the score range.
  void validate() const;

  static Detection camera(std::int64_t frame, const BBox2D& box, double score,
                          std::int64_t det_id = 0);
  static Detection lidar(std::int64_t frame, const BBox3D& box, double score,
                         std::int64_t det_id = 0);
};

using FrameDetections = std::vector<std::vector<Detection>>;

using ProjectionMatrix = Eigen::Matrix<double, 3, 4>;

struct Calibration {
  ProjectionMatrix projection = ProjectionMatrix::Zero();
  int image_width = 0;
  int image_height = 0;

  void validate() const;

  /// KITTI object/tracking camera 2 intrinsics with the 1242x375 image size.
  static Calibration kitti_default();
};

struct TrackerConfig {
  double theta_S = 0.5;
  double theta_G_2d = 0.7;
  double theta_G_3d = 3.0;
  double theta_iou = 0.3;
  int theta_hits = 3;
  int max_age_N = 3;
  double boundary_margin = 10.0;
  double sentinel = 1000.0;
  int min_output_hits = 1;

  /// Throws Error(InvalidConfig) naming the offending field.
  void validate() const;

  /// Applies one `key=value` override using the field names above.
  void set(std::string_view key, std::string_view value);

  /// Flat `key = value` text, one field per line, in declaration order.
  std::string to_text() const;
  static TrackerConfig from_text(std::string_view text);
};

TrackerConfig default_config();

}  // namespace crosstrack
