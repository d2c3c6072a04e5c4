#pragma once

#include "revio/preintegration.hpp"

namespace revio {

// Preintegration residual between two (pose, velocity, bias) states, whitened
// by the preintegrated covariance plus the bias random-walk blocks. Residual
// order: (rot, vel, pos, gyro-bias walk, accel-bias walk). State tangent order
// per frame: (pose omega, pose v, velocity, gyro bias, accel bias) = 15.
struct ImuResidualEval {
  Vec15 residual;
  Eigen::Matrix<double, 15, 15> jac_i;
  Eigen::Matrix<double, 15, 15> jac_j;
};

// Throws std::runtime_error when the preintegrated covariance is not
// invertible (degenerate preintegration).
ImuResidualEval imu_residual(const Pose& pose_i, const ImuState& state_i, const Pose& pose_j,
                             const ImuState& state_j, const Preintegrated& preint,
                             const ImuParams& params);

}  // namespace revio
