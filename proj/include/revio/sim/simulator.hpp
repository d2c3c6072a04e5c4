#pragma once

#include "revio/landmark.hpp"
#include "revio/sim/world.hpp"

namespace revio::sim {

// Ground-truth poses/velocities at frame timestamps (C2-smooth parametric
// trajectories). Throws std::invalid_argument for degenerate specs.
std::vector<TrajectorySample> generate_trajectory(const WorldModel& world, int n_frames);

// Trajectory evaluated at an arbitrary time (used at IMU rate internally).
TrajectorySample trajectory_at(const WorldModel& world, double t);

// IMU samples at imu_rate covering [0, (n_frames-1)/frame_rate]. Noise-free
// samples are constructed so the discrete propagation reproduces the
// trajectory's rotation and velocity exactly at sample times. noise=false
// produces the clean stream regardless of params' densities.
std::vector<ImuSample> generate_imu(const WorldModel& world, int n_frames, const ImuParams& params,
                                    bool noise, const ImuBias& true_bias, std::uint64_t seed);

// Stereo feature tracks with breakage. A broken track reappears under a fresh
// track id; the generator never re-links identities itself.
std::vector<FrameObservations> generate_observations(const WorldModel& world,
                                                     const std::vector<TrajectorySample>& trajectory,
                                                     const BreakageModel& breakage,
                                                     double pixel_noise_sigma, std::uint64_t seed);

// Viewpoint-dependent descriptor model.
//
// Canonical descriptors are independent random 256-bit strings per landmark.
// A sample at view angle theta flips each bit independently with probability
// p(theta) = min(0.45, 0.02 + 0.25 * theta / (pi/2)). Per-bit uniforms are
// counter-based on (seed, landmark, draw), so re-evaluating the same draw at a
// different angle flips a superset/subset of the same bits.
double flip_probability(double view_angle);

Descriptor256 canonical_descriptor(int landmark_id, std::uint64_t world_seed);

Descriptor256 sample_descriptor(const Landmark& lm, double view_angle, std::uint64_t seed);

// The same draw as sample_descriptor but addressed by (landmark, frame) and
// re-evaluable at any angle; this is the warp hook used by pose-guided
// matching (evaluating the observation's noise at the predicted residual
// angle stands in for patch warping).
Descriptor256 observation_descriptor(int landmark_id, int frame_id, double view_angle,
                                     std::uint64_t world_seed, std::uint64_t run_seed);

}  // namespace revio::sim
