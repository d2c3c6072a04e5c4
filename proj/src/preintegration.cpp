#include "revio/preintegration.hpp"

#include <stdexcept>

namespace revio {

Mat3 Preintegrated::corrected_delta_rot(const ImuBias& b) const {
  return delta_rot * so3_exp(drot_dbg * (b.gyro - bias.gyro));
}

Vec3 Preintegrated::corrected_delta_v(const ImuBias& b) const {
  return delta_v + dv_dbg * (b.gyro - bias.gyro) + dv_dba * (b.accel - bias.accel);
}

Vec3 Preintegrated::corrected_delta_p(const ImuBias& b) const {
  return delta_p + dp_dbg * (b.gyro - bias.gyro) + dp_dba * (b.accel - bias.accel);
}

Preintegrated integrate_step(const Vec3& gyro, const Vec3& accel, double dt, const ImuBias& bias,
                             const ImuParams& params) {
  if (!(dt > 0)) throw std::invalid_argument("integrate_step: dt must be positive");
  const Vec3 w = (gyro - bias.gyro) * dt;
  const Vec3 a = accel - bias.accel;

  Preintegrated out;
  out.bias = bias;
  out.delta_t = dt;
  out.delta_rot = so3_exp(w);
  out.delta_v = a * dt;
  out.delta_p = 0.5 * a * dt * dt;

  const Mat3 jr = so3_right_jacobian(w);
  out.drot_dbg = -jr * dt;
  out.dv_dba = -Mat3::Identity() * dt;
  out.dp_dba = -0.5 * Mat3::Identity() * dt * dt;
  // dv_dbg, dp_dbg stay zero for a single step (delta_rot at step start is I).

  // Discrete noise: delta_rot error = Jr*dt*eta_g, delta_v = dt*eta_a,
  // delta_p = 0.5*dt^2*eta_a, with eta variances sigma^2/dt.
  const double var_g = params.gyro_noise_density * params.gyro_noise_density / dt;
  const double var_a = params.accel_noise_density * params.accel_noise_density / dt;
  Eigen::Matrix<double, 9, 6> noise_map = Eigen::Matrix<double, 9, 6>::Zero();
  noise_map.block<3, 3>(0, 0) = jr * dt;
  noise_map.block<3, 3>(3, 3) = Mat3::Identity() * dt;
  noise_map.block<3, 3>(6, 3) = Mat3::Identity() * (0.5 * dt * dt);
  Vec6 noise_var;
  noise_var << var_g, var_g, var_g, var_a, var_a, var_a;
  out.covariance = noise_map * noise_var.asDiagonal() * noise_map.transpose();
  return out;
}

Preintegrated compose(const Preintegrated& first, const Preintegrated& second) {
  Preintegrated out;
  out.bias = first.bias;
  out.delta_t = first.delta_t + second.delta_t;
  out.delta_rot = first.delta_rot * second.delta_rot;
  out.delta_v = first.delta_v + first.delta_rot * second.delta_v;
  out.delta_p = first.delta_p + first.delta_v * second.delta_t +
                first.delta_rot * second.delta_p;

  // Error-state transition of the first block through the second, and
  // injection of the second block's error, both on (d_rot, d_v, d_p).
  Mat9 trans = Mat9::Zero();
  trans.block<3, 3>(0, 0) = second.delta_rot.transpose();
  trans.block<3, 3>(3, 0) = -first.delta_rot * skew(second.delta_v);
  trans.block<3, 3>(3, 3) = Mat3::Identity();
  trans.block<3, 3>(6, 0) = -first.delta_rot * skew(second.delta_p);
  trans.block<3, 3>(6, 3) = Mat3::Identity() * second.delta_t;
  trans.block<3, 3>(6, 6) = Mat3::Identity();

  Mat9 inject = Mat9::Zero();
  inject.block<3, 3>(0, 0) = Mat3::Identity();
  inject.block<3, 3>(3, 3) = first.delta_rot;
  inject.block<3, 3>(6, 6) = first.delta_rot;

  out.covariance =
      trans * first.covariance * trans.transpose() + inject * second.covariance * inject.transpose();

  out.drot_dbg = trans.block<3, 3>(0, 0) * first.drot_dbg + second.drot_dbg;
  out.dv_dbg = first.dv_dbg - first.delta_rot * skew(second.delta_v) * first.drot_dbg +
               first.delta_rot * second.dv_dbg;
  out.dv_dba = first.dv_dba + first.delta_rot * second.dv_dba;
  out.dp_dbg = first.dp_dbg + first.dv_dbg * second.delta_t -
               first.delta_rot * skew(second.delta_p) * first.drot_dbg +
               first.delta_rot * second.dp_dbg;
  out.dp_dba = first.dp_dba + first.dv_dba * second.delta_t + first.delta_rot * second.dp_dba;
  return out;
}

Preintegrated preintegrate(std::span<const ImuSample> samples, const ImuBias& bias,
                           const ImuParams& params) {
  if (samples.size() < 2) throw std::invalid_argument("preintegrate: need at least 2 samples");
  Preintegrated total;
  total.bias = bias;
  for (size_t k = 0; k + 1 < samples.size(); ++k) {
    const double dt = samples[k + 1].t - samples[k].t;
    if (!(dt > 0)) throw std::invalid_argument("preintegrate: timestamps must be strictly increasing");
    total = compose(total, integrate_step(samples[k].gyro, samples[k].accel, dt, bias, params));
  }
  return total;
}

PredictedState predict_state(const Pose& pose_i, const ImuState& state_i,
                             const Preintegrated& preint, const ImuParams& params) {
  const Mat3 rot_i = pose_i.rot();
  const double dt = preint.delta_t;
  const Mat3 d_rot = preint.corrected_delta_rot(state_i.bias);
  const Vec3 d_v = preint.corrected_delta_v(state_i.bias);
  const Vec3 d_p = preint.corrected_delta_p(state_i.bias);

  PredictedState out;
  out.pose.q = (Quat(rot_i * d_rot)).normalized();
  out.velocity = state_i.velocity + params.gravity * dt + rot_i * d_v;
  out.pose.p = pose_i.p + state_i.velocity * dt + 0.5 * params.gravity * dt * dt + rot_i * d_p;
  return out;
}

PredictedState predict_state(const Pose& pose_i, const ImuState& state_i,
                             std::span<const ImuSample> samples, const ImuParams& params) {
  return predict_state(pose_i, state_i, preintegrate(samples, state_i.bias, params), params);
}

}  // namespace revio
