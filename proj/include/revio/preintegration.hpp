#pragma once

#include <span>

#include "revio/imu_types.hpp"
#include "revio/pose.hpp"

namespace revio {

// Preintegrated IMU increments over an interval, relative to the body frame at
// the interval start and independent of the absolute state. Covariance and
// bias Jacobians are ordered (delta_rot, delta_v, delta_p).
struct Preintegrated {
  Mat3 delta_rot = Mat3::Identity();
  Vec3 delta_v = Vec3::Zero();
  Vec3 delta_p = Vec3::Zero();
  double delta_t = 0;
  Mat9 covariance = Mat9::Zero();
  Mat3 drot_dbg = Mat3::Zero();
  Mat3 dv_dbg = Mat3::Zero();
  Mat3 dv_dba = Mat3::Zero();
  Mat3 dp_dbg = Mat3::Zero();
  Mat3 dp_dba = Mat3::Zero();
  ImuBias bias;  // linearization point

  // Increments corrected to first order for a bias estimate away from the
  // linearization point.
  Mat3 corrected_delta_rot(const ImuBias& b) const;
  Vec3 corrected_delta_v(const ImuBias& b) const;
  Vec3 corrected_delta_p(const ImuBias& b) const;
};

// Single zero-order-hold integration step over dt.
Preintegrated integrate_step(const Vec3& gyro, const Vec3& accel, double dt, const ImuBias& bias,
                             const ImuParams& params);

// Chains two consecutive blocks sharing the same linearization bias.
Preintegrated compose(const Preintegrated& first, const Preintegrated& second);

// Zero-order hold over each sample interval; sample k holds on [t_k, t_{k+1}).
// The last sample only terminates the interval. Requires >= 2 samples with
// strictly increasing timestamps (throws std::invalid_argument otherwise).
Preintegrated preintegrate(std::span<const ImuSample> samples, const ImuBias& bias,
                           const ImuParams& params);

// IMU-propagated pose and velocity with noise terms at zero.
struct PredictedState {
  Pose pose;   // world-from-body
  Vec3 velocity;
};

PredictedState predict_state(const Pose& pose_i, const ImuState& state_i,
                             const Preintegrated& preint, const ImuParams& params);

PredictedState predict_state(const Pose& pose_i, const ImuState& state_i,
                             std::span<const ImuSample> samples, const ImuParams& params);

}  // namespace revio
