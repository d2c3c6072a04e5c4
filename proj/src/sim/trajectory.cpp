#include <cmath>
#include <stdexcept>

#include "revio/rng.hpp"
#include "revio/sim/simulator.hpp"

namespace revio::sim {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

struct PosVel {
  Vec3 p;
  Vec3 v;
};

PosVel circle_at(const TrajectorySpec& s, double t) {
  const double w = kTau / s.period_s;
  const double a = w * t;
  PosVel out;
  out.p = s.center + Vec3(s.radius * std::cos(a), s.radius * std::sin(a),
                          s.z_amplitude * std::sin(2 * a));
  out.v = Vec3(-s.radius * w * std::sin(a), s.radius * w * std::cos(a),
               2 * w * s.z_amplitude * std::cos(2 * a));
  return out;
}

PosVel lissajous_at(const TrajectorySpec& s, double t) {
  const double w = kTau / s.period_s;
  PosVel out;
  for (int i = 0; i < 3; ++i) {
    const double f = s.lissajous_freq[i] * w;
    const double phase = i * 0.5;
    out.p[i] = s.center[i] + s.lissajous_amp[i] * std::sin(f * t + phase);
    out.v[i] = s.lissajous_amp[i] * f * std::cos(f * t + phase);
  }
  return out;
}

// Closed uniform cubic B-spline through the control polygon.
PosVel waypoints_at(const TrajectorySpec& s, double t) {
  const int n = static_cast<int>(s.waypoints.size());
  const double u_total = n * t / s.period_s;
  const int seg = static_cast<int>(std::floor(u_total));
  const double u = u_total - seg;
  const auto cp = [&](int i) -> const Vec3& {
    return s.waypoints[((seg + i) % n + n) % n];
  };
  const double u2 = u * u, u3 = u2 * u;
  const double b0 = (1 - 3 * u + 3 * u2 - u3) / 6.0;
  const double b1 = (4 - 6 * u2 + 3 * u3) / 6.0;
  const double b2 = (1 + 3 * u + 3 * u2 - 3 * u3) / 6.0;
  const double b3 = u3 / 6.0;
  const double d0 = (-3 + 6 * u - 3 * u2) / 6.0;
  const double d1 = (-12 * u + 9 * u2) / 6.0;
  const double d2 = (3 + 6 * u - 9 * u2) / 6.0;
  const double d3 = 3 * u2 / 6.0;
  const double du_dt = n / s.period_s;
  PosVel out;
  out.p = b0 * cp(0) + b1 * cp(1) + b2 * cp(2) + b3 * cp(3);
  out.v = (d0 * cp(0) + d1 * cp(1) + d2 * cp(2) + d3 * cp(3)) * du_dt;
  return out;
}

Mat3 frame_from_look_dir(const Vec3& look, const Vec3& up) {
  const Vec3 z = look.normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Vec3(0, 1, 0));
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 rot;
  rot.col(0) = x;
  rot.col(1) = y;
  rot.col(2) = z;
  return rot;
}

}  // namespace

void WorldModel::validate() const {
  if (landmarks.size() < 50) throw std::invalid_argument("world: need at least 50 landmarks");
  if (frame_rate_hz <= 0 || imu_rate_hz <= 0) throw std::invalid_argument("world: rates must be positive");
  const double ratio = imu_rate_hz / frame_rate_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1) {
    throw std::invalid_argument("world: imu_rate must be an integer multiple of frame_rate");
  }
  if (trajectory.period_s <= 0) throw std::invalid_argument("world: period must be positive");
  switch (trajectory.kind) {
    case TrajectoryKind::kCircle:
      if (trajectory.radius <= 0) throw std::invalid_argument("world: zero-radius circle");
      break;
    case TrajectoryKind::kLissajous:
      if (trajectory.lissajous_amp.norm() <= 0) throw std::invalid_argument("world: zero lissajous amplitude");
      break;
    case TrajectoryKind::kWaypoints:
      if (trajectory.waypoints.size() < 4) throw std::invalid_argument("world: need >= 4 waypoints");
      break;
  }
}

TrajectorySample trajectory_at(const WorldModel& world, double t) {
  const TrajectorySpec& spec = world.trajectory;
  PosVel pv;
  switch (spec.kind) {
    case TrajectoryKind::kCircle: pv = circle_at(spec, t); break;
    case TrajectoryKind::kLissajous: pv = lissajous_at(spec, t); break;
    case TrajectoryKind::kWaypoints: pv = waypoints_at(spec, t); break;
    default: throw std::invalid_argument("trajectory_at: unknown kind");
  }
  Vec3 look;
  switch (spec.look) {
    case LookDirection::kTangent: look = pv.v; break;
    case LookDirection::kCenter: look = spec.center - pv.p; break;
    case LookDirection::kOutward: look = pv.p - spec.center; break;
  }
  look.z() = spec.look == LookDirection::kTangent ? look.z() : 0.0;
  if (look.norm() < 1e-6) look = spec.center - pv.p;
  if (look.norm() < 1e-6) look = Vec3(1, 0, 0);
  TrajectorySample out;
  out.timestamp = t;
  out.pose_wb = Pose(frame_from_look_dir(look, Vec3(0, 0, 1)), pv.p);
  out.velocity = pv.v;
  return out;
}

std::vector<TrajectorySample> generate_trajectory(const WorldModel& world, int n_frames) {
  if (n_frames < 2) throw std::invalid_argument("generate_trajectory: need >= 2 frames");
  world.validate();
  std::vector<TrajectorySample> out;
  out.reserve(n_frames);
  const double dt = 1.0 / world.frame_rate_hz;
  for (int f = 0; f < n_frames; ++f) out.push_back(trajectory_at(world, f * dt));
  return out;
}

StereoRig default_rig() {
  StereoRig rig;
  rig.left = CameraIntrinsics{400.0, 400.0, 320.0, 240.0, 640, 480};
  rig.right = rig.left;
  rig.right_in_left = Pose(Quat::Identity(), Vec3(0.11, 0, 0));
  return rig;
}

WorldModel make_cylinder_world(std::uint64_t seed, int n_landmarks, double wall_radius,
                               double wall_height, const TrajectorySpec& traj,
                               const StereoRig& rig, double frame_rate, double imu_rate) {
  WorldModel world;
  world.seed = seed;
  world.trajectory = traj;
  world.rig = rig;
  world.frame_rate_hz = frame_rate;
  world.imu_rate_hz = imu_rate;
  world.landmarks.reserve(n_landmarks);
  for (int i = 0; i < n_landmarks; ++i) {
    const double ang = kTau * rng::uniform01(rng::key(seed, rng::kLandmarkPlacement, i, 0));
    const double rad =
        wall_radius * (0.85 + 0.3 * rng::uniform01(rng::key(seed, rng::kLandmarkPlacement, i, 1)));
    const double z = traj.center.z() +
                     wall_height * (rng::uniform01(rng::key(seed, rng::kLandmarkPlacement, i, 2)) - 0.5);
    world.landmarks.emplace_back(
        i, traj.center + Vec3(rad * std::cos(ang), rad * std::sin(ang), z - traj.center.z()));
  }
  return world;
}

}  // namespace revio::sim
