#pragma once

#include <deque>

#include "revio/estimator/factors.hpp"
#include "revio/estimator/lm_solver.hpp"
#include "revio/estimator/types.hpp"

namespace revio {

struct WindowFrame {
  int frame_id = -1;
  double timestamp = 0;
  NavState state;
  // measurements registered at this frame (values copied for fast assembly)
  std::vector<Measurement> obs;
  std::vector<int> obs_lm_ids;   // parallel to obs; V_i minus AugV_i
  std::vector<int> reid_lm_ids;  // AugV_i: re-identified landmarks measured here
  Preintegrated preint_from_prev;
  bool has_preint = false;
  std::vector<ImuSample> samples_from_prev;
  int anchored_count = 0;   // landmarks first anchored at this frame
  bool is_keyframe = false; // decided at admission
};

// One measurement item handed to add_frame. lm_id < 0 requests a new landmark
// (anchored at this frame from the stereo pair).
struct FrameInputItem {
  int lm_id = -1;
  int track_id = -1;
  Vec2 left{0, 0};
  bool has_right = false;
  Vec2 right{0, 0};
  bool is_reid = false;
  Descriptor256 descriptor;
  int sim_id = -1;
};

struct FrameInput {
  int frame_id = -1;
  double timestamp = 0;
  std::vector<ImuSample> imu;  // covering [previous frame, this frame]
  std::vector<FrameInputItem> items;
};

// Fixed-lag stereo-inertial estimator. Landmarks anchored outside the window
// contribute reprojection terms with their anchor pose and inverse depth held
// fixed (read from the map view); they are only updated by global BA.
class SlidingWindowEstimator {
 public:
  SlidingWindowEstimator(const EstimatorConfig& cfg, LandmarkStore& store)
      : cfg_(cfg), store_(store) {}

  // First frame must carry an initial state.
  void set_initial_state(const NavState& state) { init_state_ = state; }

  // Returns (track_id, landmark_id) bindings for landmarks created here.
  // Marginalizes first when the window is at capacity; a produced keyframe
  // package is appended to pending_packages().
  std::vector<std::pair<int, int>> add_frame(const FrameInput& input, const MapView& map_view);

  struct SolveReport {
    LmStats stats;
    int pruned_measurements = 0;
  };
  SolveReport solve_local_ba(const MapView& map_view);

  // Cost and gradient of the window problem at the current state (for
  // gradient verification and Eq. 6 style diagnostics).
  struct CostEval {
    double cost = 0;
    Eigen::VectorXd gradient_pose;  // d(cost)/d(frame tangents)
    Eigen::VectorXd gradient_lm;    // d(cost)/d(inverse depths), per lm_ids
    std::vector<int> lm_ids;
  };
  CostEval evaluate_window(const MapView& map_view);

  // Exposed for tests; add_frame calls this automatically at capacity.
  std::optional<KeyframePackage> marginalize_oldest(const MapView& map_view);

  // Global-BA commit: left-multiply all window states by the correction.
  void apply_world_correction(const Pose& correction);

  const std::deque<WindowFrame>& frames() const { return frames_; }
  std::deque<WindowFrame>& frames() { return frames_; }
  const PriorFactor& prior() const { return prior_; }
  LandmarkStore& store() { return store_; }
  const EstimatorConfig& config() const { return cfg_; }

  // Removes a re-identified landmark's window measurements (failed Eq. 6
  // verification). Returns the items so the caller can rebuild a fresh track.
  std::vector<std::pair<int, Measurement>> unbind_reid(int lm_id);

  // Creates a fresh stereo-anchored landmark at a window frame (used when a
  // rejected re-identification falls back to a new track). Returns -1 when
  // the stereo gate fails.
  int anchor_new_landmark(int frame_id, const Measurement& m, const Descriptor256& desc,
                          int sim_id);

  // Keyframe packages and per-frame exit records accumulated by
  // marginalization, in order.
  struct ExitRecord {
    int frame_id = -1;
    double timestamp = 0;
    Pose pose_wb;
  };
  std::vector<KeyframePackage> take_packages();
  std::vector<ExitRecord> take_exits();

  bool has_frame(int frame_id) const;
  const WindowFrame* frame(int frame_id) const;
  int oldest_frame_id() const { return frames_.empty() ? -1 : frames_.front().frame_id; }

  // Landmark ids currently measured by any window frame.
  std::vector<int> tracked_landmarks() const;

 private:
  friend class LocalProblem;

  bool anchor_in_window(const LmRecord& rec) const;
  Pose anchor_pose(const LmRecord& rec, const MapView& map_view) const;

  EstimatorConfig cfg_;
  LandmarkStore& store_;
  std::deque<WindowFrame> frames_;
  PriorFactor prior_;
  std::optional<NavState> init_state_;
  std::vector<KeyframePackage> pending_packages_;
  std::vector<ExitRecord> pending_exits_;

  // keyframe bookkeeping
  bool have_last_kf_ = false;
  bool have_admitted_kf_ = false;
  Pose last_admitted_kf_pose_;
  NavState last_kf_state_;
  int last_kf_id_ = -1;
  ImuBias last_kf_bias_;
  std::vector<ImuSample> samples_since_last_kf_;
  std::optional<RelConstraint> chain_since_last_kf_;

  // pose-block Hessian from the last solve (after landmark elimination),
  // used for relative-constraint covariance extraction
  Eigen::MatrixXd last_pose_hessian_;
  std::vector<int> last_solve_frame_ids_;
};

}  // namespace revio
