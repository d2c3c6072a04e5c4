#pragma once

#include <map>
#include <optional>
#include <vector>

#include "revio/camera.hpp"
#include "revio/descriptor.hpp"
#include "revio/imu_types.hpp"
#include "revio/preintegration.hpp"

namespace revio {

// Full per-frame state. Tangent layout: (pose omega 0:3, pose dp 3:6,
// velocity 6:9, gyro bias 9:12, accel bias 12:15).
struct NavState {
  Pose pose_wb;
  Vec3 velocity{0, 0, 0};
  ImuBias bias;

  NavState retract(const Vec15& d) const {
    NavState out;
    out.pose_wb = pose_wb.retract(d.head<6>());
    out.velocity = velocity + d.segment<3>(6);
    out.bias.gyro = bias.gyro + d.segment<3>(9);
    out.bias.accel = bias.accel + d.segment<3>(12);
    return out;
  }
};

// One stereo measurement of a landmark at a frame; right pixel optional.
struct Measurement {
  int frame_id = -1;
  Vec2 left{0, 0};
  bool has_right = false;
  Vec2 right{0, 0};
  bool is_reid = false;
};

// Estimator-side landmark record. `anchor_frame` may move when a non-keyframe
// anchor leaves the window; `first_frame` keeps the original detection frame
// for time-span statistics.
struct LmRecord {
  int id = -1;
  int anchor_frame = -1;
  int first_frame = -1;
  Vec3 bearing{0, 0, 1};
  double inv_depth = 1.0;
  Descriptor256 descriptor;
  int sim_id = -1;  // ground-truth identity, evaluation only
  bool exported = false;   // anchored at a global-map keyframe; rho fixed in local BA
  bool active = true;      // still eligible for optimization
  bool augmented = false;  // verified re-identified landmark (AugV member)
  std::vector<Measurement> meas;  // ascending frame_id

  int last_obs_frame() const { return meas.empty() ? anchor_frame : meas.back().frame_id; }
};

class LandmarkStore {
 public:
  LmRecord& create(int anchor_frame, const Vec3& bearing, double inv_depth,
                   const Descriptor256& desc, int sim_id) {
    const int id = next_id_++;
    LmRecord rec;
    rec.id = id;
    rec.anchor_frame = anchor_frame;
    rec.first_frame = anchor_frame;
    rec.bearing = bearing;
    rec.inv_depth = inv_depth;
    rec.descriptor = desc;
    rec.sim_id = sim_id;
    return recs_.emplace(id, std::move(rec)).first->second;
  }

  LmRecord* find(int id) {
    auto it = recs_.find(id);
    return it == recs_.end() ? nullptr : &it->second;
  }
  const LmRecord* find(int id) const {
    auto it = recs_.find(id);
    return it == recs_.end() ? nullptr : &it->second;
  }
  LmRecord& at(int id) { return recs_.at(id); }
  const LmRecord& at(int id) const { return recs_.at(id); }

  std::map<int, LmRecord>& records() { return recs_; }
  const std::map<int, LmRecord>& records() const { return recs_; }

 private:
  std::map<int, LmRecord> recs_;
  int next_id_ = 0;
};

// Relative-pose constraint between consecutive keyframes, with covariance on
// the (rot, trans) residual tangent.
struct RelConstraint {
  Pose t_rel;  // previous-keyframe frame: T_prev^-1 o T_this
  Mat6 covariance = Mat6::Identity();
};

// Everything the global map needs when a keyframe exits the window.
struct KeyframePackage {
  int frame_id = -1;
  double timestamp = 0;
  NavState state;
  std::vector<Measurement> obs;        // measurements made at this frame
  std::vector<int> obs_lm_ids;         // parallel to obs
  std::vector<int> reid_lm_ids;        // AugV subset at this frame
  std::vector<int> anchored_lm_ids;    // landmarks anchored here, now map-owned
  std::optional<Preintegrated> preint_from_prev_kf;
  std::optional<RelConstraint> rel_from_prev_kf;
};

// Immutable view of the global map taken at a frame boundary; shared by
// fixed-anchor residual assembly and re-identification.
struct MapView {
  std::uint64_t version = 0;

  struct KfView {
    int id = -1;
    double ts = 0;
    Pose pose_wb;
    std::vector<int> landmark_ids;  // exported landmarks observed here
  };
  struct LmView {
    int id = -1;
    int anchor_kf = -1;
    Vec3 bearing{0, 0, 1};
    double inv_depth = 1.0;
    Descriptor256 descriptor;
    Vec3 world_point{0, 0, 0};
    Vec3 anchor_view_dir{0, 0, 1};  // unit vector landmark -> anchor camera
    int sim_id = -1;
  };

  std::map<int, KfView> keyframes;
  std::map<int, LmView> landmarks;

  bool empty() const { return keyframes.empty(); }
};

struct EstimatorConfig {
  int window_size = 10;
  double pixel_sigma = 1.0;
  double huber_delta_px = 2.0;
  // keyframe promotion
  int keyframe_min_new_anchors = 20;
  double keyframe_rotation_rad = 0.25;
  double keyframe_translation_m = 0.3;
  // initial prior
  double prior_pose_information = 1e8;
  double prior_velocity_sigma = 1e-2;
  double prior_bias_sigma = 1e-1;
  // stereo triangulation gates
  double min_disparity_px = 1.0;
  double min_depth_m = 0.2;
  double max_depth_m = 80.0;
  int solver_max_iterations = 20;
  int gba_max_iterations = 10;  // warm-started global BA rarely needs more
  // additive floor on per-step relative-pose covariance; the window marginals
  // capture only modeled noise, not linearization drift
  double rel_cov_floor_rot = 2e-4;  // rad
  double rel_cov_floor_pos = 5e-4;  // m
  // bias-walk inflation for keyframe-to-keyframe IMU factors: decoupled
  // window estimation moves bias estimates far more than the physical walk
  double kf_bias_walk_inflation = 50.0;
  ImuParams imu;
  StereoRig rig;
};

}  // namespace revio
