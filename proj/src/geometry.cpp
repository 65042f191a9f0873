#include "crosstrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

namespace crosstrack::geometry {

double iou_2d(const BBox2D& a, const BBox2D& b) {
  const double iw = std::min(a.right, b.right) - std::max(a.left, b.left);
  const double ih = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double centroid_distance_3d(const BBox3D& a, const BBox3D& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

std::array<Eigen::Vector3d, 8> box_corners(const BBox3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  std::array<Eigen::Vector3d, 8> corners;
  int k = 0;
  for (double dx : {-0.5, 0.5}) {
    for (double dy : {-0.5, 0.5}) {
      for (double dz : {-0.5, 0.5}) {
        const double ox = dx * box.l;
        const double oy = dy * box.h;
        const double oz = dz * box.w;
        corners[k++] = Eigen::Vector3d(box.x + c * ox + s * oz, box.y + oy, box.z - s * ox + c * oz);
      }
    }
  }
  return corners;
}

BBox2D project_box_3d(const BBox3D& box, const Calibration& calib) {
  double u_min = std::numeric_limits<double>::infinity();
  double v_min = u_min;
  double u_max = -u_min;
  double v_max = -u_min;
  bool any_in_front = false;
  for (const auto& corner : box_corners(box)) {
    const Eigen::Vector3d p = calib.projection * corner.homogeneous();
    if (p.z() <= 0.0) continue;
    any_in_front = true;
    const double u = p.x() / p.z();
    const double v = p.y() / p.z();
    u_min = std::min(u_min, u);
    u_max = std::max(u_max, u);
    v_min = std::min(v_min, v);
    v_max = std::max(v_max, v);
  }
  if (!any_in_front) {
    throw Error(ErrorCode::AllBehindCamera, "no box corner lies in front of the camera");
  }
  const double w = calib.image_width;
  const double h = calib.image_height;
  BBox2D hull{std::clamp(u_min, 0.0, w), std::clamp(v_min, 0.0, h), std::clamp(u_max, 0.0, w),
              std::clamp(v_max, 0.0, h)};
  if (!hull.valid()) {
    throw Error(ErrorCode::DegenerateProjection, "projected hull has zero area inside the image");
  }
  return hull;
}

std::optional<BBox2D> try_project_box_3d(const BBox3D& box, const Calibration& calib) {
  try {
    return project_box_3d(box, calib);
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool at_image_boundary(const BBox2D& box, const Calibration& calib, double margin) {
  return box.left <= margin || box.top <= margin ||
         box.right >= calib.image_width - margin || box.bottom >= calib.image_height - margin;
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle, two_pi);
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  if (wrapped > std::numbers::pi) wrapped -= two_pi;
  return wrapped;
}

}  // namespace crosstrack::geometry
