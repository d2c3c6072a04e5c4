#include <cmath>
#include <unordered_map>

#include "revio/rng.hpp"
#include "revio/sim/simulator.hpp"

namespace revio::sim {

namespace {
constexpr double kNearClip = 0.2;

struct TrackState {
  int track_id = -1;
  int age = 0;                 // consecutive frames observed
  int last_entry_frame = -1;   // index into frames vector
  int last_entry_index = -1;   // index into that frame's entries
  Vec3 canonical_dir{0, 0, 1}; // view direction at first-ever sighting
  bool ever_seen = false;
};
}  // namespace

std::vector<FrameObservations> generate_observations(const WorldModel& world,
                                                     const std::vector<TrajectorySample>& trajectory,
                                                     const BreakageModel& breakage,
                                                     double pixel_noise_sigma, std::uint64_t seed) {
  world.validate();
  if (breakage.forced_break_period == 1) {
    throw std::invalid_argument("breakage: forced_break_period must be >= 2 (or 0 to disable)");
  }
  int cap = breakage.max_track_length;
  if (breakage.forced_break_period >= 2) cap = std::min(cap, breakage.forced_break_period);

  const double margin = 1.0 + 4.0 * pixel_noise_sigma;
  const Pose left_in_right = world.rig.right_in_left.inverse();

  std::vector<FrameObservations> frames;
  frames.reserve(trajectory.size());
  std::unordered_map<int, TrackState> tracks;
  int next_track_id = 0;

  for (size_t f = 0; f < trajectory.size(); ++f) {
    FrameObservations frame;
    frame.frame_id = static_cast<int>(f);
    frame.timestamp = trajectory[f].timestamp;
    const Pose body_from_world = trajectory[f].pose_wb.inverse();

    for (const auto& [lm_id, x_world] : world.landmarks) {
      TrackState& ts = tracks[lm_id];
      const auto kill_track = [&] {
        if (ts.age > 0 && ts.last_entry_frame >= 0) {
          frames[ts.last_entry_frame].entries[ts.last_entry_index].track_alive = false;
        }
        ts.age = 0;
      };

      const Vec3 x_left = body_from_world.act(x_world);
      if (x_left.z() < kNearClip) {
        kill_track();
        continue;
      }
      const Vec3 x_right = left_in_right.act(x_left);
      const auto px_left = project(world.rig.left, x_left);
      const auto px_right = project(world.rig.right, x_right);
      if (!px_left || !px_right || !world.rig.left.in_image(*px_left, margin) ||
          !world.rig.right.in_image(*px_right, margin)) {
        kill_track();
        continue;
      }

      // Breakage: the landmark is skipped for this frame and restarts under a
      // fresh track id at its next sighting.
      bool broke = false;
      if (ts.age > 0) {
        if (ts.age + 1 > cap) broke = true;
        if (breakage.occlusion_probability > 0 &&
            rng::uniform01(rng::key(breakage.seed, rng::kOcclusion, f, lm_id)) <
                breakage.occlusion_probability) {
          broke = true;
        }
      }
      if (broke) {
        kill_track();
        continue;
      }

      if (ts.age == 0) ts.track_id = next_track_id++;
      ts.age += 1;

      const Vec3 view_dir = (trajectory[f].pose_wb.p - x_world).normalized();
      if (!ts.ever_seen) {
        ts.ever_seen = true;
        ts.canonical_dir = view_dir;
      }
      const double cosang = std::clamp(ts.canonical_dir.dot(view_dir), -1.0, 1.0);
      const double view_angle = std::acos(cosang);

      ObservationEntry e;
      e.track_id = ts.track_id;
      e.sim_landmark_id = lm_id;
      e.track_age = ts.age;
      e.track_alive = true;
      e.view_angle = view_angle;
      e.left_px = *px_left;
      e.right_px = *px_right;
      if (pixel_noise_sigma > 0) {
        e.left_px.x() += pixel_noise_sigma * rng::gauss(rng::key(seed, rng::kPixelNoise, f, lm_id, 0));
        e.left_px.y() += pixel_noise_sigma * rng::gauss(rng::key(seed, rng::kPixelNoise, f, lm_id, 1));
        e.right_px.x() += pixel_noise_sigma * rng::gauss(rng::key(seed, rng::kPixelNoise, f, lm_id, 2));
        e.right_px.y() += pixel_noise_sigma * rng::gauss(rng::key(seed, rng::kPixelNoise, f, lm_id, 3));
      }
      e.descriptor = observation_descriptor(lm_id, static_cast<int>(f), view_angle, world.seed, seed);

      ts.last_entry_frame = static_cast<int>(f);
      ts.last_entry_index = static_cast<int>(frame.entries.size());
      frame.entries.push_back(e);
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace revio::sim
