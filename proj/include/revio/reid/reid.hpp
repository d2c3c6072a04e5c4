#pragma once

#include <functional>

#include "revio/estimator/types.hpp"
#include "revio/sim/world.hpp"

namespace revio::reid {

// Axis-aligned cube summarizing a keyframe's observed landmark distribution:
// [mean - sqrt(var), mean + sqrt(var)], elementwise, population variance.
struct ViewZone {
  Vec3 lo{0, 0, 0};
  Vec3 hi{0, 0, 0};

  bool intersects(const ViewZone& other) const {
    return lo.x() <= other.hi.x() && other.lo.x() <= hi.x() && lo.y() <= other.hi.y() &&
           other.lo.y() <= hi.y() && lo.z() <= other.hi.z() && other.lo.z() <= hi.z();
  }
};

struct ReidConfig {
  int t_map = 1000;        // submap size bound
  int t_dist = 50;         // Hamming acceptance threshold, bits
  double t_rep = 10.0;     // mean reprojection gate, pixels
  double r_geo = 3.0;      // geometry gate radius, pixels
  double f_geo = 0.6;      // keyframe inlier fraction
  int n_top = 30;          // accepted matches per frame
  int min_age = 20;        // minimum keyframe age gap, frames (2 * window)
  double ratio_test = 1.2; // second-best / best; <= 1 disables
  double warp_floor_rad = 0.05;  // residual view angle after ideal warping
};

struct SubmapEntry {
  int landmark_id = -1;
  int source_kf = -1;
  Vec3 world_point{0, 0, 0};
  Descriptor256 descriptor;
};

struct STSSubmap {
  std::vector<SubmapEntry> entries;  // source keyframes ascending by timestamp
  int built_at_frame = -1;
  std::uint64_t map_version = 0;
};

// Per-frame log record (one CSV row).
struct ReidFrameLog {
  int frame_id = -1;
  int submap_size = 0;
  int candidates_considered = 0;
  int matches_accepted = 0;
  int matches_discarded = 0;  // by the mean-reprojection gate
};

ViewZone compute_view_zone(const MapView::KfView& kf, const MapView& view);

// Spatially overlapped keyframes of the reference zone, oldest first, capped
// at t_map entries. Landmarks currently tracked in the window are excluded.
// Empty map (no keyframe older than min_age) yields an empty submap.
STSSubmap build_sts_submap(int current_frame, int reference_kf, const MapView& view,
                           const std::vector<int>& window_tracked, const ReidConfig& cfg);

// Unbounded variant: every keyframe's landmarks regardless of zones, age, or
// the size cap (the pose-guided-matching-only ablation).
STSSubmap build_full_submap(int current_frame, const MapView& view,
                            const std::vector<int>& window_tracked, const ReidConfig& cfg);

// Drift-consistency check: projects the keyframe's landmarks through the
// predicted pose; passes iff at least f_geo of the in-view projections land
// within r_geo pixels of some detected feature.
bool geometry_filter_keyframe(const MapView::KfView& kf, const MapView& view,
                              const Pose& predicted_pose_wb, const CameraIntrinsics& cam,
                              const sim::FrameObservations& current_obs, const ReidConfig& cfg);

// Hook realizing patch warping in simulation: re-evaluates the observation's
// descriptor noise at the given residual view angle.
using WarpFn = std::function<Descriptor256(const sim::ObservationEntry&, double eff_angle)>;

struct Match {
  int landmark_id = -1;
  int obs_index = -1;  // into current_obs.entries
  int distance = 0;    // Hamming bits
};

struct MatchResult {
  std::vector<Match> matches;  // ascending distance, at most n_top
  int pairs_evaluated = 0;
};

// Pose-guided matching of new (age-1) features against the submap. With
// pose_guided=false the projection gate and warping are disabled and raw
// descriptor distances are used (absolute threshold only).
MatchResult match_features(const STSSubmap& submap, const MapView& view,
                           const Pose& predicted_pose_wb, const CameraIntrinsics& cam,
                           const sim::FrameObservations& current_obs, const ReidConfig& cfg,
                           bool pose_guided, const WarpFn& warp);

// Mean reprojection error over a landmark's measurement set (window frames
// plus keyframes); the caller supplies pose lookup by frame id.
using PoseLookup = std::function<std::optional<Pose>(int frame_id)>;

struct VerifyResult {
  bool keep = false;
  double mean_error_px = 0;
  int measurements = 0;
};

VerifyResult verify_reid(const LmRecord& rec, const Pose& anchor_pose, const StereoRig& rig,
                         const PoseLookup& poses, const ReidConfig& cfg);

}  // namespace revio::reid
