#include "crosstrack/core.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace crosstrack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::InvalidDetection: return "InvalidDetection";
    case ErrorCode::InvalidCalibration: return "InvalidCalibration";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::AllBehindCamera: return "AllBehindCamera";
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::MissingBox: return "MissingBox";
    case ErrorCode::NonPositiveExtent: return "NonPositiveExtent";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::FrameOrderViolation: return "FrameOrderViolation";
    case ErrorCode::CalibrationMissing: return "CalibrationMissing";
    case ErrorCode::InfeasibleScene: return "InfeasibleScene";
    case ErrorCode::InvalidFaultSpec: return "InvalidFaultSpec";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string_view to_string(Stream stream) {
  return stream == Stream::camera ? "camera" : "lidar";
}

Stream opposite(Stream stream) {
  return stream == Stream::camera ? Stream::lidar : Stream::camera;
}

bool BBox2D::valid() const {
  return std::isfinite(left) && std::isfinite(top) && std::isfinite(right) &&
         std::isfinite(bottom) && left < right && top < bottom;
}

BBox2D BBox2D::make(double left, double top, double right, double bottom) {
  BBox2D box{left, top, right, bottom};
  if (!box.valid()) {
    std::ostringstream msg;
    msg << "2D box (" << left << ", " << top << ", " << right << ", " << bottom
        << ") must be finite with left < right and top < bottom";
    throw Error(ErrorCode::InvalidBox, msg.str());
  }
  return box;
}

bool BBox3D::valid() const {
  const bool finite = std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
                      std::isfinite(l) && std::isfinite(w) && std::isfinite(h) &&
                      std::isfinite(yaw);
  return finite && l > 0.0 && w > 0.0 && h > 0.0 && yaw >= -std::numbers::pi &&
         yaw <= std::numbers::pi;
}

BBox3D BBox3D::make(double x, double y, double z, double l, double w, double h, double yaw) {
  BBox3D box{x, y, z, l, w, h, yaw};
  if (!box.valid()) {
    std::ostringstream msg;
    msg << "3D box must be finite with positive extents and yaw in [-pi, pi] (l=" << l
        << " w=" << w << " h=" << h << " yaw=" << yaw << ")";
    throw Error(ErrorCode::InvalidBox, msg.str());
  }
  return box;
}

void Detection::validate() const {
  if (stream == Stream::camera && !box2d) {
    throw Error(ErrorCode::InvalidDetection, "camera detection without a 2D box");
  }
  if (stream == Stream::lidar && !box3d) {
    throw Error(ErrorCode::InvalidDetection, "lidar detection without a 3D box");
  }
  if (box2d && !box2d->valid()) {
    throw Error(ErrorCode::InvalidDetection, "detection carries an invalid 2D box");
  }
  if (box3d && !box3d->valid()) {
    throw Error(ErrorCode::InvalidDetection, "detection carries an invalid 3D box");
  }
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorCode::InvalidDetection, "score must lie in [0, 1]");
  }
  if (frame < 0) {
    throw Error(ErrorCode::InvalidDetection, "frame index must be non-negative");
  }
}

Detection Detection::camera(std::int64_t frame, const BBox2D& box, double score,
                            std::int64_t det_id) {
  Detection det;
  det.frame = frame;
  det.stream = Stream::camera;
  det.box2d = box;
  det.score = score;
  det.det_id = det_id;
  det.validate();
  return det;
}

Detection Detection::lidar(std::int64_t frame, const BBox3D& box, double score,
                           std::int64_t det_id) {
  Detection det;
  det.frame = frame;
  det.stream = Stream::lidar;
  det.box3d = box;
  det.score = score;
  det.det_id = det_id;
  det.validate();
  return det;
}

void Calibration::validate() const {
  if (!projection.allFinite()) {
    throw Error(ErrorCode::InvalidCalibration, "projection matrix has non-finite entries");
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 3, 4>> lu(projection);
  if (lu.rank() < 3) {
    throw Error(ErrorCode::InvalidCalibration, "projection matrix must have full row rank");
  }
  if (image_width <= 0 || image_height <= 0) {
    throw Error(ErrorCode::InvalidCalibration, "image dimensions must be positive");
  }
}

Calibration Calibration::kitti_default() {
  Calibration calib;
  calib.projection << 721.5377, 0.0, 609.5593, 44.85728,  //
      0.0, 721.5377, 172.854, 0.2163791,                  //
      0.0, 0.0, 1.0, 0.002745884;
  calib.image_width = 1242;
  calib.image_height = 375;
  return calib;
}

namespace {

void require(bool ok, std::string_view field, std::string_view what) {
  if (!ok) {
    throw Error(ErrorCode::InvalidConfig, std::string(field) + " " + std::string(what));
  }
}

bool unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(key) + ": cannot parse '" + std::string(text) + "' as a number");
  }
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  int v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidConfig,
                std::string(key) + ": cannot parse '" + std::string(text) + "' as an integer");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void TrackerConfig::validate() const {
  require(unit(theta_S), "theta_S", "must lie in [0, 1]");
  require(unit(theta_G_2d), "theta_G_2d", "must lie in [0, 1]");
  require(std::isfinite(theta_G_3d) && theta_G_3d > 0.0, "theta_G_3d",
          "must be a positive finite distance");
  require(unit(theta_iou), "theta_iou", "must lie in [0, 1]");
  require(theta_hits >= 0, "theta_hits", "must be non-negative");
  require(max_age_N >= 1, "max_age_N", "must be at least 1");
  require(std::isfinite(boundary_margin) && boundary_margin >= 0.0, "boundary_margin",
          "must be a non-negative finite pixel count");
  // Finite costs are bounded by (1 - S) + G_hat <= 2.
  require(std::isfinite(sentinel) && sentinel > 2.0, "sentinel",
          "must be finite and exceed the maximal finite cost 2");
  require(min_output_hits >= 0, "min_output_hits", "must be non-negative");
}

void TrackerConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "theta_S") theta_S = parse_double(key, value);
  else if (key == "theta_G_2d") theta_G_2d = parse_double(key, value);
  else if (key == "theta_G_3d") theta_G_3d = parse_double(key, value);
  else if (key == "theta_iou") theta_iou = parse_double(key, value);
  else if (key == "theta_hits") theta_hits = parse_int(key, value);
  else if (key == "max_age_N") max_age_N = parse_int(key, value);
  else if (key == "boundary_margin") boundary_margin = parse_double(key, value);
  else if (key == "sentinel") sentinel = parse_double(key, value);
  else if (key == "min_output_hits") min_output_hits = parse_int(key, value);
  else throw Error(ErrorCode::InvalidConfig, "unknown configuration key '" + std::string(key) + "'");
}

std::string TrackerConfig::to_text() const {
  std::ostringstream out;
  out << "theta_S = " << format_double(theta_S) << '\n'
      << "theta_G_2d = " << format_double(theta_G_2d) << '\n'
      << "theta_G_3d = " << format_double(theta_G_3d) << '\n'
      << "theta_iou = " << format_double(theta_iou) << '\n'
      << "theta_hits = " << theta_hits << '\n'
      << "max_age_N = " << max_age_N << '\n'
      << "boundary_margin = " << format_double(boundary_margin) << '\n'
      << "sentinel = " << format_double(sentinel) << '\n'
      << "min_output_hits = " << min_output_hits << '\n';
  return out.str();
}

TrackerConfig TrackerConfig::from_text(std::string_view text) {
  TrackerConfig cfg = default_config();
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

TrackerConfig default_config() { return TrackerConfig{}; }

}  // namespace crosstrack
