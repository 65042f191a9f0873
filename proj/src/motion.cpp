#include "crosstrack/motion.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "crosstrack/geometry.hpp"

namespace crosstrack::motion {
namespace {

constexpr double kMinShape = 1e-6;

template <class State>
using Transition = typename State::Matrix;

template <class State>
using Observation = Eigen::Matrix<double, State::meas_dim, State::state_dim>;

template <class State>
Transition<State> transition() {
  constexpr int n = State::state_dim;
  constexpr int m = State::meas_dim;
  Transition<State> f = Transition<State>::Identity();
  // Velocities occupy the tail and drive the leading n - m components.
  for (int i = 0; i < n - m; ++i) f(i, m + i) = 1.0;
  return f;
}

template <class State>
Observation<State> observation() {
  Observation<State> h = Observation<State>::Zero();
  for (int i = 0; i < State::meas_dim; ++i) h(i, i) = 1.0;
  return h;
}

template <class State>
typename State::Matrix process_noise();

template <>
KF2DState::Matrix process_noise<KF2DState>() {
  KF2DState::Vector q;
  q << noise::process_position_var, noise::process_position_var, noise::process_position_var,
      noise::process_position_var, noise::process_velocity_var, noise::process_velocity_var,
      noise::process_area_rate_var;
  return q.asDiagonal();
}

template <>
KF3DState::Matrix process_noise<KF3DState>() {
  KF3DState::Vector q = KF3DState::Vector::Constant(noise::process_position_var);
  q.tail<3>().setConstant(noise::process_velocity_var);
  return q.asDiagonal();
}

template <class State>
Eigen::Matrix<double, State::meas_dim, State::meas_dim> measurement_noise();

template <>
Eigen::Matrix4d measurement_noise<KF2DState>() {
  return Eigen::Vector4d(noise::meas_center_var_2d, noise::meas_center_var_2d,
                         noise::meas_shape_var_2d, noise::meas_shape_var_2d)
      .asDiagonal();
}

template <>
Eigen::Matrix<double, 7, 7> measurement_noise<KF3DState>() {
  return Eigen::Matrix<double, 7, 7>::Identity() * noise::meas_var_3d;
}

template <class State>
State init_from(const typename State::Measurement& z) {
  State state;
  state.mean.setZero();
  state.mean.template head<State::meas_dim>() = z;
  typename State::Vector diag = State::Vector::Constant(noise::initial_position_var);
  diag.template tail<State::state_dim - State::meas_dim>().setConstant(
      noise::initial_velocity_var);
  state.covariance = diag.asDiagonal();
  state.innovation.setZero();
  return state;
}

template <class State>
State predict_linear(const State& state) {
  const auto f = transition<State>();
  State next = state;
  next.mean = f * state.mean;
  next.covariance = f * state.covariance * f.transpose() + process_noise<State>();
  next.covariance = 0.5 * (next.covariance + next.covariance.transpose());
  return next;
}

template <class State>
State update_linear(const State& state, const typename State::Measurement& residual) {
  const auto h = observation<State>();
  const auto r = measurement_noise<State>();
  using Gain = Eigen::Matrix<double, State::state_dim, State::meas_dim>;
  const auto s = (h * state.covariance * h.transpose() + r).eval();
  // K = P H^T S^-1, solved through the SPD innovation covariance.
  const Gain k = s.ldlt().solve(h * state.covariance).transpose();
  State next = state;
  next.mean = state.mean + k * residual;
  const typename State::Matrix i_kh = State::Matrix::Identity() - k * h;
  // Joseph form keeps the covariance symmetric positive-definite.
  next.covariance = i_kh * state.covariance * i_kh.transpose() + k * r * k.transpose();
  next.covariance = 0.5 * (next.covariance + next.covariance.transpose());
  next.innovation = residual;
  return next;
}

const BBox2D& require_2d(const Detection& det) {
  if (!det.box2d) throw Error(ErrorCode::MissingBox, "detection has no 2D box");
  return *det.box2d;
}

const BBox3D& require_3d(const Detection& det) {
  if (!det.box3d) throw Error(ErrorCode::MissingBox, "detection has no 3D box");
  return *det.box3d;
}

}  // namespace

Eigen::Vector4d encode_box(const BBox2D& box) {
  const double w = box.width();
  const double h = box.height();
  return {box.center_u(), box.center_v(), w * h, w / h};
}

Eigen::Matrix<double, 7, 1> encode_box(const BBox3D& box) {
  Eigen::Matrix<double, 7, 1> z;
  z << box.x, box.y, box.z, box.yaw, box.l, box.w, box.h;
  return z;
}

KF2DState kf_init_2d(const Detection& det) {
  return init_from<KF2DState>(encode_box(require_2d(det)));
}

KF3DState kf_init_3d(const Detection& det) {
  return init_from<KF3DState>(encode_box(require_3d(det)));
}

KFState kf_init(const Detection& det) {
  if (det.stream == Stream::camera) return kf_init_2d(det);
  return kf_init_3d(det);
}

KF2DState kf_predict(const KF2DState& state) {
  KF2DState guarded = state;
  // An area rate that would drive the area non-positive is dropped.
  if (guarded.mean(2) + guarded.mean(6) <= 0.0) guarded.mean(6) = 0.0;
  return predict_linear(guarded);
}

KF3DState kf_predict(const KF3DState& state) { return predict_linear(state); }

KFState kf_predict(const KFState& state) {
  return std::visit([](const auto& s) -> KFState { return kf_predict(s); }, state);
}

KF2DState kf_update(const KF2DState& state, const Detection& det) {
  const Eigen::Vector4d z = encode_box(require_2d(det));
  KF2DState next = update_linear(state, Eigen::Vector4d(z - state.mean.head<4>()));
  next.mean(2) = std::max(next.mean(2), kMinShape);
  next.mean(3) = std::max(next.mean(3), kMinShape);
  return next;
}

KF3DState kf_update(const KF3DState& state, const Detection& det) {
  const auto z = encode_box(require_3d(det));
  KF3DState::Measurement residual = z - state.mean.head<7>();
  residual(3) = geometry::wrap_angle(residual(3));
  KF3DState next = update_linear(state, residual);
  next.mean(3) = geometry::wrap_angle(next.mean(3));
  for (int i = 4; i < 7; ++i) next.mean(i) = std::max(next.mean(i), kMinShape);
  return next;
}

KFState kf_update(const KFState& state, const Detection& det) {
  return std::visit([&det](const auto& s) -> KFState { return kf_update(s, det); }, state);
}

BBox2D kf_box(const KF2DState& state) {
  const double s = state.mean(2);
  const double r = state.mean(3);
  if (!(s > 0.0) || !(r > 0.0)) {
    throw Error(ErrorCode::NonPositiveExtent, "image-plane state has non-positive area or ratio");
  }
  const double w = std::sqrt(s * r);
  const double h = s / w;
  const double u = state.mean(0);
  const double v = state.mean(1);
  return BBox2D{u - 0.5 * w, v - 0.5 * h, u + 0.5 * w, v + 0.5 * h};
}

BBox3D kf_box(const KF3DState& state) {
  const auto& m = state.mean;
  if (!(m(4) > 0.0) || !(m(5) > 0.0) || !(m(6) > 0.0)) {
    throw Error(ErrorCode::NonPositiveExtent, "3D state has a non-positive extent");
  }
  return BBox3D{m(0), m(1), m(2), m(4), m(5), m(6), geometry::wrap_angle(m(3))};
}

}  // namespace crosstrack::motion
