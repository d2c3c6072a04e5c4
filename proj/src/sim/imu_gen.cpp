#include <cmath>
#include <stdexcept>

#include "revio/rng.hpp"
#include "revio/sim/simulator.hpp"

namespace revio::sim {

// Inverts the discrete propagation per interval: the gyro reading is the exact
// per-step rotation rate and the accel reading makes the velocity recursion
// exact, so noise-free replay reproduces rotation and velocity at every sample
// time and position to within the zero-order-hold truncation.
std::vector<ImuSample> generate_imu(const WorldModel& world, int n_frames, const ImuParams& params,
                                    bool noise, const ImuBias& true_bias, std::uint64_t seed) {
  if (n_frames < 2) throw std::invalid_argument("generate_imu: need >= 2 frames");
  world.validate();
  const double total = (n_frames - 1) / world.frame_rate_hz;
  const double dt = 1.0 / world.imu_rate_hz;
  const int n = static_cast<int>(std::llround(total * world.imu_rate_hz));

  std::vector<ImuSample> out;
  out.reserve(n + 1);
  TrajectorySample cur = trajectory_at(world, 0.0);
  ImuBias bias = true_bias;
  const double sg = params.gyro_noise_density * std::sqrt(world.imu_rate_hz);
  const double sa = params.accel_noise_density * std::sqrt(world.imu_rate_hz);
  const double wg = params.gyro_bias_walk * std::sqrt(dt);
  const double wa = params.accel_bias_walk * std::sqrt(dt);

  for (int k = 0; k <= n; ++k) {
    const double t = k * dt;
    ImuSample s;
    s.t = t;
    if (k < n) {
      const TrajectorySample next = trajectory_at(world, (k + 1) * dt);
      const Mat3 rot = cur.pose_wb.rot();
      s.gyro = so3_log(Mat3(rot.transpose() * next.pose_wb.rot())) / dt;
      s.accel = rot.transpose() * ((next.velocity - cur.velocity) / dt - params.gravity);
      cur = next;
    } else if (!out.empty()) {
      s.gyro = out.back().gyro;
      s.accel = out.back().accel;
    }
    s.gyro += bias.gyro;
    s.accel += bias.accel;
    if (noise) {
      for (int ax = 0; ax < 3; ++ax) {
        s.gyro[ax] += sg * rng::gauss(rng::key(seed, rng::kImuNoise, k, ax));
        s.accel[ax] += sa * rng::gauss(rng::key(seed, rng::kImuNoise, k, 3 + ax));
        bias.gyro[ax] += wg * rng::gauss(rng::key(seed, rng::kBiasWalk, k, ax));
        bias.accel[ax] += wa * rng::gauss(rng::key(seed, rng::kBiasWalk, k, 3 + ax));
      }
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace revio::sim
