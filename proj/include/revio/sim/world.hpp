#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "revio/camera.hpp"
#include "revio/descriptor.hpp"
#include "revio/imu_types.hpp"

namespace revio::sim {

enum class TrajectoryKind { kCircle, kLissajous, kWaypoints };

enum class LookDirection { kTangent, kCenter, kOutward };

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kCircle;
  Vec3 center{0, 0, 1.2};
  double radius = 3.0;        // circle
  double period_s = 12.0;     // one loop
  double z_amplitude = 0.15;  // vertical bobbing
  // lissajous amplitudes/frequency ratios
  Vec3 lissajous_amp{3.0, 2.0, 0.3};
  Eigen::Vector3i lissajous_freq{1, 2, 3};
  std::vector<Vec3> waypoints;  // closed loop control points
  LookDirection look = LookDirection::kTangent;
};

struct WorldModel {
  std::vector<std::pair<int, Vec3>> landmarks;  // (id, world point)
  TrajectorySpec trajectory;
  StereoRig rig;
  double frame_rate_hz = 20.0;
  double imu_rate_hz = 200.0;
  std::uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument
};

struct BreakageModel {
  int forced_break_period = 0;      // frames; 0 disables, else >= 2
  double occlusion_probability = 0; // per visible track per frame
  int max_track_length = 1 << 30;   // frames
  std::uint64_t seed = 0;
};

struct ObservationEntry {
  int track_id = -1;       // what the front-end exposes; new id after breakage
  int sim_landmark_id = -1;  // ground-truth identity, for evaluation only
  Vec2 left_px{0, 0};
  Vec2 right_px{0, 0};
  Descriptor256 descriptor;
  int track_age = 1;       // 1 = newly detected this frame
  bool track_alive = true; // survives into the next frame (not killed now)
  double view_angle = 0;   // rad vs canonical direction; hidden warp channel
};

struct FrameObservations {
  int frame_id = 0;
  double timestamp = 0;
  std::vector<ObservationEntry> entries;
};

// Ground-truth sample per frame: world-from-body pose and world velocity.
struct TrajectorySample {
  double timestamp = 0;
  Pose pose_wb;
  Vec3 velocity{0, 0, 0};
};

// Helper world builders used by the CLI and tests.
WorldModel make_cylinder_world(std::uint64_t seed, int n_landmarks, double wall_radius,
                               double wall_height, const TrajectorySpec& traj,
                               const StereoRig& rig, double frame_rate, double imu_rate);

StereoRig default_rig();

}  // namespace revio::sim
