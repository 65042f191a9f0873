#pragma once

#include <variant>

#include <Eigen/Core>

#include "crosstrack/core.hpp"

namespace crosstrack::motion {

/// Gaussian state of a constant-velocity filter. `innovation` holds the
/// residual of the most recent measurement update (zero before the first).
template <int StateDim, int MeasDim>
struct KalmanState {
  static constexpr int state_dim = StateDim;
  static constexpr int meas_dim = MeasDim;
  using Vector = Eigen::Matrix<double, StateDim, 1>;
  using Matrix = Eigen::Matrix<double, StateDim, StateDim>;
  using Measurement = Eigen::Matrix<double, MeasDim, 1>;

  Vector mean = Vector::Zero();
  Matrix covariance = Matrix::Identity();
  Measurement innovation = Measurement::Zero();
};

/// Image-plane state [u, v, s, r, du, dv, ds]: box center, area, aspect
/// ratio (w/h) and the rates of the first three.
using KF2DState = KalmanState<7, 4>;

/// Spatial state [x, y, z, yaw, l, w, h, dx, dy, dz]. Yaw and extents are
/// measured but carry no velocity.
using KF3DState = KalmanState<10, 7>;

using KFState = std::variant<KF2DState, KF3DState>;

/// Filter constants. Initial covariance is diagonal with the velocity block
/// 1000x the measured block; the process noise on velocities is 1/100 of
/// the noise on measured components. These are the values used by the
/// reference image-plane and 3D constant-velocity box trackers; the
/// noise-free convergence tests pin them.
namespace noise {
inline constexpr double initial_position_var = 10.0;
inline constexpr double initial_velocity_var = 10000.0;
inline constexpr double process_position_var = 1.0;
inline constexpr double process_velocity_var = 0.01;
/// Rate-of-area process noise for the image-plane filter.
inline constexpr double process_area_rate_var = 1e-4;
/// Measurement noise of (u, v) and of (s, r) respectively.
inline constexpr double meas_center_var_2d = 1.0;
inline constexpr double meas_shape_var_2d = 10.0;
inline constexpr double meas_var_3d = 1.0;
}  // namespace noise

KF2DState kf_init_2d(const Detection& det);
KF3DState kf_init_3d(const Detection& det);
/// Camera detections initialise an image-plane filter, LiDAR detections a 3D one.
KFState kf_init(const Detection& det);

KF2DState kf_predict(const KF2DState& state);
KF3DState kf_predict(const KF3DState& state);
KFState kf_predict(const KFState& state);

/// Throws MissingBox when the detection lacks the measured box.
KF2DState kf_update(const KF2DState& state, const Detection& det);
KF3DState kf_update(const KF3DState& state, const Detection& det);
KFState kf_update(const KFState& state, const Detection& det);

/// Throws NonPositiveExtent when the encoded shape is not a valid box.
BBox2D kf_box(const KF2DState& state);
BBox3D kf_box(const KF3DState& state);

Eigen::Vector4d encode_box(const BBox2D& box);
Eigen::Matrix<double, 7, 1> encode_box(const BBox3D& box);

}  // namespace crosstrack::motion
