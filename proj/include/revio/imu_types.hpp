#pragma once

#include <vector>

#include "revio/math.hpp"

namespace revio {

struct ImuSample {
  double t = 0;   // seconds
  Vec3 gyro{0, 0, 0};   // rad/s
  Vec3 accel{0, 0, 0};  // m/s^2, specific force
};

struct ImuBias {
  Vec3 gyro{0, 0, 0};
  Vec3 accel{0, 0, 0};

  Vec6 vec() const {
    Vec6 v;
    v << gyro, accel;
    return v;
  }
};

// M = (v, b): velocity and bias.
struct ImuState {
  Vec3 velocity{0, 0, 0};
  ImuBias bias;
};

struct ImuParams {
  double gyro_noise_density = 1.7e-4;    // rad/s/sqrt(Hz)
  double accel_noise_density = 2.0e-3;   // m/s^2/sqrt(Hz)
  double gyro_bias_walk = 1.9e-5;        // rad/s^2/sqrt(Hz)
  double accel_bias_walk = 3.0e-3;       // m/s^3/sqrt(Hz)
  Vec3 gravity{0, 0, -9.81};
};

}  // namespace revio
