#include "revio/imu_residual.hpp"

#include <stdexcept>

namespace revio {

ImuResidualEval imu_residual(const Pose& pose_i, const ImuState& state_i, const Pose& pose_j,
                             const ImuState& state_j, const Preintegrated& preint,
                             const ImuParams& params) {
  const Mat3 rot_i = pose_i.rot();
  const Mat3 rot_it = rot_i.transpose();
  const Mat3 rot_j = pose_j.rot();
  const double dt = preint.delta_t;
  const Vec3& g = params.gravity;

  const Vec3 dbg = state_i.bias.gyro - preint.bias.gyro;
  const Mat3 d_rot = preint.corrected_delta_rot(state_i.bias);
  const Vec3 d_v = preint.corrected_delta_v(state_i.bias);
  const Vec3 d_p = preint.corrected_delta_p(state_i.bias);

  const Vec3 r_rot = so3_log(Mat3(d_rot.transpose() * rot_it * rot_j));
  const Vec3 vel_term = rot_it * (state_j.velocity - state_i.velocity - g * dt);
  const Vec3 pos_term = rot_it * (pose_j.p - pose_i.p - state_i.velocity * dt - 0.5 * g * dt * dt);

  Vec15 r;
  r << r_rot, vel_term - d_v, pos_term - d_p, state_j.bias.gyro - state_i.bias.gyro,
      state_j.bias.accel - state_i.bias.accel;

  // Tangent layout per frame: (omega 0:3, dp 3:6, v 6:9, bg 9:12, ba 12:15).
  Eigen::Matrix<double, 15, 15> ji = Eigen::Matrix<double, 15, 15>::Zero();
  Eigen::Matrix<double, 15, 15> jj = Eigen::Matrix<double, 15, 15>::Zero();

  const Mat3 jl_inv_r = so3_left_jacobian_inv(r_rot);
  ji.block<3, 3>(0, 0) = -jl_inv_r * d_rot.transpose();
  ji.block<3, 3>(0, 9) = -jl_inv_r * so3_right_jacobian(preint.drot_dbg * dbg) * preint.drot_dbg;
  jj.block<3, 3>(0, 0) = so3_right_jacobian_inv(r_rot);

  ji.block<3, 3>(3, 0) = skew(vel_term);
  ji.block<3, 3>(3, 6) = -rot_it;
  ji.block<3, 3>(3, 9) = -preint.dv_dbg;
  ji.block<3, 3>(3, 12) = -preint.dv_dba;
  jj.block<3, 3>(3, 6) = rot_it;

  ji.block<3, 3>(6, 0) = skew(pos_term);
  ji.block<3, 3>(6, 3) = -Mat3::Identity();
  ji.block<3, 3>(6, 6) = -rot_it * dt;
  ji.block<3, 3>(6, 9) = -preint.dp_dbg;
  ji.block<3, 3>(6, 12) = -preint.dp_dba;
  jj.block<3, 3>(6, 3) = rot_it * rot_j;

  ji.block<3, 3>(9, 9) = -Mat3::Identity();
  jj.block<3, 3>(9, 9) = Mat3::Identity();
  ji.block<3, 3>(12, 12) = -Mat3::Identity();
  jj.block<3, 3>(12, 12) = Mat3::Identity();

  Mat15 cov = Mat15::Zero();
  cov.topLeftCorner<9, 9>() = preint.covariance;
  cov.block<3, 3>(9, 9) = Mat3::Identity() * params.gyro_bias_walk * params.gyro_bias_walk * dt;
  cov.block<3, 3>(12, 12) = Mat3::Identity() * params.accel_bias_walk * params.accel_bias_walk * dt;

  const Eigen::LLT<Mat15> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("imu_residual: preintegration covariance is not invertible");
  }

  ImuResidualEval out;
  out.residual = llt.matrixL().solve(r);
  out.jac_i = llt.matrixL().solve(ji);
  out.jac_j = llt.matrixL().solve(jj);
  return out;
}

}  // namespace revio
