#pragma once

#include <array>
#include <optional>

#include <Eigen/Core>

#include "crosstrack/core.hpp"

namespace crosstrack::geometry {

double iou_2d(const BBox2D& a, const BBox2D& b);

double centroid_distance_3d(const BBox3D& a, const BBox3D& b);

/// The eight corners of a box in camera coordinates. Length runs along the
/// object's x axis, height along y, width along z; yaw rotates about y.
std::array<Eigen::Vector3d, 8> box_corners(const BBox3D& box);

/// Axis-aligned hull of the projected corners, clipped to the image.
/// Corners with non-positive depth are left out of the hull.
/// Throws AllBehindCamera or DegenerateProjection.
BBox2D project_box_3d(const BBox3D& box, const Calibration& calib);

/// Non-throwing variant for callers that treat unprojectable boxes as absent.
std::optional<BBox2D> try_project_box_3d(const BBox3D& box, const Calibration& calib);

bool at_image_boundary(const BBox2D& box, const Calibration& calib, double margin);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

}  // namespace crosstrack::geometry
