#include "revio/estimator/sliding_window.hpp"
#include "revio/imu_residual.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace revio {

namespace {

struct HuberWeight {
  double cost;
  double scale;  // multiply residual and jacobians by this before accumulation
};

// Robust cost rho(e)/sigma^2 with e = |r| in pixels; scale folds the IRLS
// weight and the pixel whitening together.
HuberWeight huber(const Vec2& r, double delta, double sigma) {
  const double e = r.norm();
  const double inv_var = 1.0 / (sigma * sigma);
  if (e <= delta) return {0.5 * e * e * inv_var, std::sqrt(inv_var)};
  return {(delta * e - 0.5 * delta * delta) * inv_var, std::sqrt(delta / e * inv_var)};
}

Eigen::Matrix<double, 15, 15> pinv_psd(const Eigen::Matrix<double, 15, 15>& m) {
  Eigen::SelfAdjointEigenSolver<Mat15> es(Mat15(0.5 * (m + m.transpose())));
  const Vec15 ev = es.eigenvalues();
  const double floor = std::max(ev.maxCoeff(), 0.0) * 1e-10 + 1e-300;
  Vec15 inv = Vec15::Zero();
  for (int i = 0; i < 15; ++i) {
    if (ev[i] > floor) inv[i] = 1.0 / ev[i];
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

bool SlidingWindowEstimator::anchor_in_window(const LmRecord& rec) const {
  if (rec.exported) return false;
  return !frames_.empty() && rec.anchor_frame >= frames_.front().frame_id;
}

Pose SlidingWindowEstimator::anchor_pose(const LmRecord& rec, const MapView& map_view) const {
  if (anchor_in_window(rec)) {
    for (const auto& f : frames_) {
      if (f.frame_id == rec.anchor_frame) return f.state.pose_wb;
    }
  }
  const auto it = map_view.keyframes.find(rec.anchor_frame);
  if (it == map_view.keyframes.end()) {
    throw std::runtime_error("anchor_pose: anchor frame not available");
  }
  return it->second.pose_wb;
}

// ---------------------------------------------------------------------------
// Local bundle-adjustment problem over the window.

class LocalProblem : public LeastSquaresProblem {
 public:
  LocalProblem(SlidingWindowEstimator& est, const MapView& map_view)
      : est_(est), view_(map_view), cfg_(est.cfg_) {
    auto& frames = est_.frames_;
    for (size_t i = 0; i < frames.size(); ++i) frame_offset_[frames[i].frame_id] = 15 * i;

    // Window-anchored active landmarks become scalar variables.
    for (const auto& f : frames) {
      for (int lm_id : f.obs_lm_ids) {
        const LmRecord* rec = est_.store_.find(lm_id);
        if (!rec || !rec->active || rec->exported) continue;
        if (!est_.anchor_in_window(*rec)) continue;
        if (!lm_index_.contains(lm_id)) {
          const int idx = static_cast<int>(lm_ids_.size());
          lm_index_[lm_id] = idx;
          lm_ids_.push_back(lm_id);
        }
      }
    }

    // Freeze the set of usable measurements for this solve.
    skip_.assign(frames.size(), {});
    for (size_t i = 0; i < frames.size(); ++i) {
      skip_[i].assign(frames[i].obs.size(), false);
      for (size_t k = 0; k < frames[i].obs.size(); ++k) {
        if (!eval_measurement(i, k, nullptr, nullptr)) {
          skip_[i][k] = true;
          ++pruned_;
        }
      }
    }
  }

  int pose_dim() const override { return static_cast<int>(est_.frames_.size()) * 15; }
  int landmark_count() const override { return static_cast<int>(lm_ids_.size()); }
  int pruned() const { return pruned_; }
  const std::vector<int>& landmark_ids() const { return lm_ids_; }

  std::optional<double> evaluate(NormalEquations* normals) override {
    double cost = 0;
    auto& frames = est_.frames_;

    if (est_.prior_.valid()) {
      const auto ev = est_.prior_.evaluate(frames.front().state);
      cost += 0.5 * ev.residual.squaredNorm();
      if (normals) normals->add_dense({{0, ev.jacobian}}, ev.residual);
    }

    for (size_t i = 1; i < frames.size(); ++i) {
      if (!frames[i].has_preint) continue;
      const auto ev = imu_residual(frames[i - 1].state.pose_wb,
                                   ImuState{frames[i - 1].state.velocity, frames[i - 1].state.bias},
                                   frames[i].state.pose_wb,
                                   ImuState{frames[i].state.velocity, frames[i].state.bias},
                                   frames[i].preint_from_prev, cfg_.imu);
      cost += 0.5 * ev.residual.squaredNorm();
      if (normals) {
        normals->add_dense({{static_cast<int>(15 * (i - 1)), Eigen::MatrixXd(ev.jac_i)},
                            {static_cast<int>(15 * i), Eigen::MatrixXd(ev.jac_j)}},
                           ev.residual);
      }
    }

    for (size_t i = 0; i < frames.size(); ++i) {
      for (size_t k = 0; k < frames[i].obs.size(); ++k) {
        if (skip_[i][k]) continue;
        double c = 0;
        if (!eval_measurement(i, k, normals, &c)) return std::nullopt;
        cost += c;
      }
    }
    return cost;
  }

  void apply_step(const Eigen::VectorXd& d_pose, const Eigen::VectorXd& d_lm) override {
    auto& frames = est_.frames_;
    for (size_t i = 0; i < frames.size(); ++i) {
      frames[i].state = frames[i].state.retract(Vec15(d_pose.segment<15>(15 * i)));
    }
    for (size_t j = 0; j < lm_ids_.size(); ++j) {
      est_.store_.at(lm_ids_[j]).inv_depth += d_lm[j];
    }
  }

  void save_state() override {
    saved_states_.clear();
    for (const auto& f : est_.frames_) saved_states_.push_back(f.state);
    saved_depths_.clear();
    for (int id : lm_ids_) saved_depths_.push_back(est_.store_.at(id).inv_depth);
  }

  void restore_state() override {
    for (size_t i = 0; i < est_.frames_.size(); ++i) est_.frames_[i].state = saved_states_[i];
    for (size_t j = 0; j < lm_ids_.size(); ++j) {
      est_.store_.at(lm_ids_[j]).inv_depth = saved_depths_[j];
    }
  }

 private:
  // Evaluates one frame measurement (left + optional right residual).
  // Returns false if any of its residuals is invalid at the current state.
  bool eval_measurement(size_t fi, size_t k, NormalEquations* normals, double* cost) {
    auto& frames = est_.frames_;
    const auto& frame = frames[fi];
    const Measurement& m = frame.obs[k];
    const int lm_id = frame.obs_lm_ids[k];
    const LmRecord* rec = est_.store_.find(lm_id);
    if (!rec || !rec->active) return true;  // silently inert

    const bool in_window = est_.anchor_in_window(*rec);
    double rho = rec->inv_depth;
    Pose anchor;
    Vec3 bearing = rec->bearing;
    int off_s = -1;
    int lm_idx = -1;
    if (in_window) {
      const auto off_it = frame_offset_.find(rec->anchor_frame);
      if (off_it == frame_offset_.end()) return true;
      off_s = off_it->second;
      const auto idx_it = lm_index_.find(lm_id);
      lm_idx = idx_it == lm_index_.end() ? -1 : idx_it->second;
      anchor = frames[off_s / 15].state.pose_wb;
    } else {
      const auto lv = view_.landmarks.find(lm_id);
      if (lv == view_.landmarks.end()) return true;  // not yet visible in this view
      const auto kv = view_.keyframes.find(lv->second.anchor_kf);
      if (kv == view_.keyframes.end()) return true;
      anchor = kv->second.pose_wb;
      bearing = lv->second.bearing;
      rho = lv->second.inv_depth;
    }
    if (!(rho > 0)) return false;

    const int off_i = static_cast<int>(15 * fi);
    const bool at_anchor = in_window && frame.frame_id == rec->anchor_frame;

    if (!at_anchor) {
      const auto ev = project_body_residual(cfg_.rig.left, Pose::identity(), frame.state.pose_wb,
                                            anchor, bearing, rho, m.left);
      if (!ev) return false;
      const auto w = huber(ev->residual, cfg_.huber_delta_px, cfg_.pixel_sigma);
      if (cost) *cost += w.cost;
      if (normals) {
        normals->add_visual(off_i, w.scale * ev->jac_pose_i, off_s, w.scale * ev->jac_pose_anchor,
                            lm_idx, Vec2(w.scale * ev->jac_inv_depth), Vec2(w.scale * ev->residual));
      }
    }

    if (m.has_right) {
      const Pose cam_from_body = cfg_.rig.right_in_left.inverse();
      const auto ev = project_body_residual(cfg_.rig.right, cam_from_body, frame.state.pose_wb,
                                            anchor, bearing, rho, m.right);
      if (!ev) return false;
      const auto w = huber(ev->residual, cfg_.huber_delta_px, cfg_.pixel_sigma);
      if (cost) *cost += w.cost;
      if (normals) {
        // at the anchor frame the two pose jacobians cancel exactly; only the
        // inverse depth is observable
        if (at_anchor) {
          normals->add_visual(-1, {}, -1, {}, lm_idx, Vec2(w.scale * ev->jac_inv_depth),
                              Vec2(w.scale * ev->residual));
        } else {
          normals->add_visual(off_i, w.scale * ev->jac_pose_i, off_s, w.scale * ev->jac_pose_anchor,
                              lm_idx, Vec2(w.scale * ev->jac_inv_depth),
                              Vec2(w.scale * ev->residual));
        }
      }
    }
    return true;
  }

  SlidingWindowEstimator& est_;
  const MapView& view_;
  const EstimatorConfig& cfg_;
  std::map<int, int> frame_offset_;
  std::map<int, int> lm_index_;
  std::vector<int> lm_ids_;
  std::vector<std::vector<bool>> skip_;
  int pruned_ = 0;
  std::vector<NavState> saved_states_;
  std::vector<double> saved_depths_;
};

// ---------------------------------------------------------------------------

std::vector<std::pair<int, int>> SlidingWindowEstimator::add_frame(const FrameInput& input,
                                                                   const MapView& map_view) {
  if (!frames_.empty() && input.timestamp <= frames_.back().timestamp) {
    throw std::invalid_argument("add_frame: timestamps must increase");
  }
  if (static_cast<int>(frames_.size()) >= cfg_.window_size) {
    marginalize_oldest(map_view);
  }

  WindowFrame frame;
  frame.frame_id = input.frame_id;
  frame.timestamp = input.timestamp;

  if (frames_.empty()) {
    if (!init_state_) throw std::runtime_error("add_frame: initial state not set");
    frame.state = *init_state_;
    // initial gauge prior
    Vec15 info;
    const double vp = 1.0 / (cfg_.prior_velocity_sigma * cfg_.prior_velocity_sigma);
    const double bp = 1.0 / (cfg_.prior_bias_sigma * cfg_.prior_bias_sigma);
    info << Vec6::Constant(cfg_.prior_pose_information), Vec3::Constant(vp), Vec3::Constant(bp),
        Vec3::Constant(bp);
    prior_ = PriorFactor::diagonal(frame.state, info);
  } else {
    const auto& prev = frames_.back();
    if (input.imu.size() < 2 || input.imu.front().t > prev.timestamp + 1e-6 ||
        input.imu.back().t < input.timestamp - 1e-6) {
      throw std::runtime_error("add_frame: IMU gap, samples do not cover the frame interval");
    }
    frame.preint_from_prev = preintegrate(input.imu, prev.state.bias, cfg_.imu);
    frame.has_preint = true;
    frame.samples_from_prev = input.imu;
    const auto pred = predict_state(prev.state.pose_wb,
                                    ImuState{prev.state.velocity, prev.state.bias},
                                    frame.preint_from_prev, cfg_.imu);
    frame.state.pose_wb = pred.pose;
    frame.state.velocity = pred.velocity;
    frame.state.bias = prev.state.bias;
  }

  // keyframe promotion, decided at admission so landmark anchoring can
  // target frames that will enter the global map
  if (!have_admitted_kf_) {
    frame.is_keyframe = true;
  } else {
    const double rot =
        so3_log(Mat3(last_admitted_kf_pose_.rot().transpose() * frame.state.pose_wb.rot())).norm();
    const double trans = (frame.state.pose_wb.p - last_admitted_kf_pose_.p).norm();
    frame.is_keyframe = rot >= cfg_.keyframe_rotation_rad || trans >= cfg_.keyframe_translation_m;
  }

  std::vector<std::pair<int, int>> bindings;
  for (const auto& item : input.items) {
    Measurement m;
    m.frame_id = input.frame_id;
    m.left = item.left;
    m.has_right = item.has_right;
    m.right = item.right;
    m.is_reid = item.is_reid;

    int lm_id = item.lm_id;
    if (lm_id < 0) {
      if (!item.has_right) continue;
      const double disparity = item.left.x() - item.right.x();
      if (disparity < cfg_.min_disparity_px) continue;
      const double depth = cfg_.rig.left.fx * cfg_.rig.baseline() / disparity;
      if (depth < cfg_.min_depth_m || depth > cfg_.max_depth_m) continue;
      auto& rec = store_.create(input.frame_id, unproject(cfg_.rig.left, item.left), 1.0 / depth,
                                item.descriptor, item.sim_id);
      lm_id = rec.id;
      frame.anchored_count += 1;
      bindings.emplace_back(item.track_id, lm_id);
    } else if (!store_.find(lm_id)) {
      throw std::invalid_argument("add_frame: unknown landmark id");
    }

    LmRecord& rec = store_.at(lm_id);
    if (!rec.active && !rec.exported) continue;
    rec.meas.push_back(m);
    frame.obs.push_back(m);
    frame.obs_lm_ids.push_back(lm_id);
    if (m.is_reid) frame.reid_lm_ids.push_back(lm_id);
  }

  if (!frame.is_keyframe && frame.anchored_count >= cfg_.keyframe_min_new_anchors) {
    frame.is_keyframe = true;
  }
  if (frame.is_keyframe) {
    have_admitted_kf_ = true;
    last_admitted_kf_pose_ = frame.state.pose_wb;
  }
  frames_.push_back(std::move(frame));
  return bindings;
}

SlidingWindowEstimator::SolveReport SlidingWindowEstimator::solve_local_ba(const MapView& map_view) {
  if (frames_.size() < 2) throw std::invalid_argument("solve_local_ba: need at least 2 frames");

  LocalProblem problem(*this, map_view);
  LmOptions opts;
  opts.max_iterations = cfg_.solver_max_iterations;
  NormalEquations final_eq;
  SolveReport report;
  report.stats = lm_solve(problem, opts, &final_eq);
  report.pruned_measurements = problem.pruned();

  // Reduced pose Hessian (landmarks eliminated, no damping), kept for
  // relative-constraint covariance extraction at marginalization.
  last_pose_hessian_ = final_eq.h_pp;
  for (const auto& blk : final_eq.lm) {
    if (blk.h <= 0) continue;
    const double inv = 1.0 / blk.h;
    for (const auto& [oa, ca] : blk.cross) {
      for (const auto& [ob, cb] : blk.cross) {
        last_pose_hessian_.block<6, 6>(oa, ob) -= ca * inv * cb.transpose();
      }
    }
  }
  last_solve_frame_ids_.clear();
  for (const auto& f : frames_) last_solve_frame_ids_.push_back(f.frame_id);
  return report;
}

SlidingWindowEstimator::CostEval SlidingWindowEstimator::evaluate_window(const MapView& map_view) {
  LocalProblem problem(*this, map_view);
  NormalEquations eq;
  eq.resize(problem.pose_dim(), problem.landmark_count());
  const auto cost = problem.evaluate(&eq);
  CostEval out;
  out.cost = cost.value_or(std::numeric_limits<double>::quiet_NaN());
  out.gradient_pose = -eq.b_p;
  out.gradient_lm.resize(eq.lm.size());
  for (size_t j = 0; j < eq.lm.size(); ++j) out.gradient_lm[j] = -eq.lm[j].b;
  out.lm_ids = problem.landmark_ids();
  return out;
}

std::optional<KeyframePackage> SlidingWindowEstimator::marginalize_oldest(const MapView& map_view) {
  if (frames_.size() < 2) throw std::logic_error("marginalize_oldest: need at least 2 frames");
  WindowFrame& t0 = frames_[0];
  WindowFrame& t1 = frames_[1];

  const bool is_keyframe = t0.is_keyframe || !have_last_kf_;

  // -- relative step (t0 -> t1) with covariance from the last solve
  RelConstraint step;
  step.t_rel = t0.state.pose_wb.inverse() * t1.state.pose_wb;
  bool have_cov = last_pose_hessian_.rows() >= 30 && last_solve_frame_ids_.size() >= 2 &&
                  last_solve_frame_ids_[0] == t0.frame_id && last_solve_frame_ids_[1] == t1.frame_id;
  if (have_cov) {
    const int n = static_cast<int>(last_pose_hessian_.rows());
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 12);
    for (int c = 0; c < 6; ++c) rhs(c, c) = 1.0;
    for (int c = 0; c < 6; ++c) rhs(15 + c, 6 + c) = 1.0;
    Eigen::MatrixXd ridge = last_pose_hessian_;
    ridge.diagonal().array() += 1e-9 * std::max(1.0, ridge.diagonal().maxCoeff());
    const Eigen::MatrixXd sol = Eigen::LDLT<Eigen::MatrixXd>(ridge).solve(rhs);
    Eigen::Matrix<double, 12, 12> joint;
    for (int r = 0; r < 6; ++r) joint.row(r) = sol.row(r);
    for (int r = 0; r < 6; ++r) joint.row(6 + r) = sol.row(15 + r);
    if (joint.allFinite()) {
      step.covariance = relative_pose_covariance(t0.state.pose_wb, t1.state.pose_wb, joint);
    } else {
      have_cov = false;
    }
  }
  if (!have_cov) {
    Vec6 diag;
    diag << Vec3::Constant(4e-6), Vec3::Constant(2.5e-5);
    step.covariance = diag.asDiagonal();
  }
  Vec6 floor_diag;
  floor_diag << Vec3::Constant(cfg_.rel_cov_floor_rot * cfg_.rel_cov_floor_rot),
      Vec3::Constant(cfg_.rel_cov_floor_pos * cfg_.rel_cov_floor_pos);
  step.covariance += Mat6(floor_diag.asDiagonal());
  // guard against indefinite extraction
  Eigen::SelfAdjointEigenSolver<Mat6> es(Mat6(0.5 * (step.covariance + step.covariance.transpose())));
  const double floor = std::max(es.eigenvalues().maxCoeff() * 1e-9, 1e-12);
  Vec6 ev = es.eigenvalues().cwiseMax(floor);
  step.covariance = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();

  // -- keyframe package (relative chain up to t0, before composing this step)
  std::optional<KeyframePackage> package;
  if (is_keyframe) {
    KeyframePackage pkg;
    pkg.frame_id = t0.frame_id;
    pkg.timestamp = t0.timestamp;
    pkg.state = t0.state;
    pkg.obs = t0.obs;
    pkg.obs_lm_ids = t0.obs_lm_ids;
    pkg.reid_lm_ids = t0.reid_lm_ids;
    for (const auto& [id, rec] : store_.records()) {
      if (rec.active && !rec.exported && rec.anchor_frame == t0.frame_id) {
        pkg.anchored_lm_ids.push_back(id);
      }
    }
    if (have_last_kf_ && samples_since_last_kf_.size() >= 2) {
      pkg.preint_from_prev_kf = preintegrate(samples_since_last_kf_, last_kf_bias_, cfg_.imu);
    }
    if (have_last_kf_ && chain_since_last_kf_) pkg.rel_from_prev_kf = *chain_since_last_kf_;

    have_last_kf_ = true;
    last_kf_state_ = t0.state;
    last_kf_id_ = t0.frame_id;
    last_kf_bias_ = t0.state.bias;
    samples_since_last_kf_.clear();
    chain_since_last_kf_.reset();
    package = std::move(pkg);
  }

  // extend the chain toward the next keyframe
  chain_since_last_kf_ =
      chain_since_last_kf_ ? compose_relative(*chain_since_last_kf_, step) : step;
  if (t1.has_preint) {
    for (const auto& s : t1.samples_from_prev) {
      // frame chunks share their boundary sample
      if (!samples_since_last_kf_.empty() && s.t <= samples_since_last_kf_.back().t + 1e-12) {
        continue;
      }
      samples_since_last_kf_.push_back(s);
    }
  }

  // -- landmark bookkeeping first, so re-anchored landmarks can be absorbed
  std::set<int> observed_later;
  for (size_t i = 1; i < frames_.size(); ++i) {
    observed_later.insert(frames_[i].obs_lm_ids.begin(), frames_[i].obs_lm_ids.end());
  }
  for (auto& [id, rec] : store_.records()) {
    if (!rec.active || rec.exported || rec.anchor_frame != t0.frame_id) continue;
    if (is_keyframe) continue;  // map insert will own these
    if (observed_later.contains(id)) {
      // re-anchor to the oldest remaining observer
      const Vec3 x_world = t0.state.pose_wb.act(rec.bearing / rec.inv_depth);
      const WindowFrame* host = nullptr;
      for (size_t i = 1; i < frames_.size() && !host; ++i) {
        if (std::find(frames_[i].obs_lm_ids.begin(), frames_[i].obs_lm_ids.end(), id) !=
            frames_[i].obs_lm_ids.end()) {
          host = &frames_[i];
        }
      }
      const Vec3 x_host = host->state.pose_wb.inverse().act(x_world);
      if (x_host.z() < cfg_.min_depth_m) {
        rec.active = false;
        continue;
      }
      rec.anchor_frame = host->frame_id;
      rec.bearing = Vec3(x_host.x() / x_host.z(), x_host.y() / x_host.z(), 1.0);
      rec.inv_depth = 1.0 / x_host.z();
    } else {
      rec.active = false;
    }
  }

  // -- Schur-complement marginalization onto (T_t1, M_t1)
  Eigen::Matrix<double, 30, 30> h = Eigen::Matrix<double, 30, 30>::Zero();
  Eigen::Matrix<double, 30, 1> b = Eigen::Matrix<double, 30, 1>::Zero();

  if (prior_.valid()) {
    const auto ev_prior = prior_.evaluate(t0.state);
    h.topLeftCorner<15, 15>() += ev_prior.jacobian.transpose() * ev_prior.jacobian;
    b.head<15>() -= ev_prior.jacobian.transpose() * ev_prior.residual;
  }
  if (t1.has_preint) {
    const auto ev = imu_residual(t0.state.pose_wb, ImuState{t0.state.velocity, t0.state.bias},
                                 t1.state.pose_wb, ImuState{t1.state.velocity, t1.state.bias},
                                 t1.preint_from_prev, cfg_.imu);
    Eigen::Matrix<double, 15, 30> jac;
    jac << ev.jac_i, ev.jac_j;
    h += jac.transpose() * jac;
    b -= jac.transpose() * ev.residual;
  }
  // Visual terms at t0. Fixed-anchor landmarks contribute through the t0 pose
  // alone; landmarks anchored at t1 are absorbed with their inverse depth
  // frozen (the anchor-pose coupling lands on the surviving prior state).
  // Measurements of landmarks anchored deeper in the window are dropped to
  // keep the prior over a single state.
  for (size_t k = 0; k < t0.obs.size(); ++k) {
    const LmRecord* rec = store_.find(t0.obs_lm_ids[k]);
    if (!rec || !rec->active) continue;
    const bool in_window = anchor_in_window(*rec);

    Pose anchor;
    Vec3 bearing = rec->bearing;
    double rho = rec->inv_depth;
    bool couple_t1 = false;
    if (in_window) {
      if (rec->anchor_frame == t0.frame_id || rec->anchor_frame != t1.frame_id) continue;
      anchor = t1.state.pose_wb;
      couple_t1 = true;
    } else {
      const auto lv = map_view.landmarks.find(rec->id);
      if (lv == map_view.landmarks.end()) continue;
      const auto kv = map_view.keyframes.find(lv->second.anchor_kf);
      if (kv == map_view.keyframes.end()) continue;
      anchor = kv->second.pose_wb;
      bearing = lv->second.bearing;
      rho = lv->second.inv_depth;
    }

    const auto add_vis = [&](const CameraIntrinsics& cam, const Pose& cam_from_body,
                             const Vec2& z) {
      const auto ev =
          project_body_residual(cam, cam_from_body, t0.state.pose_wb, anchor, bearing, rho, z);
      if (!ev) return;
      const auto w = huber(ev->residual, cfg_.huber_delta_px, cfg_.pixel_sigma);
      Eigen::Matrix<double, 2, 30> jac = Eigen::Matrix<double, 2, 30>::Zero();
      jac.block<2, 6>(0, 0) = w.scale * ev->jac_pose_i;
      if (couple_t1) jac.block<2, 6>(0, 15) = w.scale * ev->jac_pose_anchor;
      h += jac.transpose() * jac;
      b -= jac.transpose() * (w.scale * ev->residual);
    };
    add_vis(cfg_.rig.left, Pose::identity(), t0.obs[k].left);
    if (t0.obs[k].has_right) {
      add_vis(cfg_.rig.right, cfg_.rig.right_in_left.inverse(), t0.obs[k].right);
    }
  }

  const Mat15 h_mm_inv = pinv_psd(h.topLeftCorner<15, 15>());
  const Mat15 h_new = h.bottomRightCorner<15, 15>() -
                      h.bottomLeftCorner<15, 15>() * h_mm_inv * h.topRightCorner<15, 15>();
  const Vec15 b_new = b.tail<15>() - h.bottomLeftCorner<15, 15>() * h_mm_inv * b.head<15>();
  prior_ = PriorFactor::from_information(t1.state, h_new, b_new);

  pending_exits_.push_back({t0.frame_id, t0.timestamp, t0.state.pose_wb});
  if (package) pending_packages_.push_back(*package);
  frames_.pop_front();
  return package;
}

std::vector<KeyframePackage> SlidingWindowEstimator::take_packages() {
  return std::exchange(pending_packages_, {});
}

std::vector<SlidingWindowEstimator::ExitRecord> SlidingWindowEstimator::take_exits() {
  return std::exchange(pending_exits_, {});
}

int SlidingWindowEstimator::anchor_new_landmark(int frame_id, const Measurement& m,
                                                const Descriptor256& desc, int sim_id) {
  WindowFrame* frame = nullptr;
  for (auto& f : frames_) {
    if (f.frame_id == frame_id) frame = &f;
  }
  if (!frame || !m.has_right) return -1;
  const double disparity = m.left.x() - m.right.x();
  if (disparity < cfg_.min_disparity_px) return -1;
  const double depth = cfg_.rig.left.fx * cfg_.rig.baseline() / disparity;
  if (depth < cfg_.min_depth_m || depth > cfg_.max_depth_m) return -1;

  auto& rec =
      store_.create(frame_id, unproject(cfg_.rig.left, m.left), 1.0 / depth, desc, sim_id);
  Measurement meas = m;
  meas.is_reid = false;
  rec.meas.push_back(meas);
  frame->obs.push_back(meas);
  frame->obs_lm_ids.push_back(rec.id);
  frame->anchored_count += 1;
  return rec.id;
}

void SlidingWindowEstimator::apply_world_correction(const Pose& correction) {
  for (auto& f : frames_) {
    f.state.pose_wb = correction * f.state.pose_wb;
    f.state.velocity = correction.q * f.state.velocity;
  }
  if (prior_.valid()) prior_.apply_world_correction(correction);
  if (have_last_kf_) {
    last_kf_state_.pose_wb = correction * last_kf_state_.pose_wb;
    last_kf_state_.velocity = correction.q * last_kf_state_.velocity;
  }
  // rotate the cached Hessian's velocity blocks to the corrected frame
  if (last_pose_hessian_.rows() > 0) {
    const Mat3 rot = correction.rot();
    for (int f = 0; f * 15 < last_pose_hessian_.rows(); ++f) {
      const int off = f * 15 + 6;
      last_pose_hessian_.middleRows<3>(off) = rot * last_pose_hessian_.middleRows<3>(off);
      last_pose_hessian_.middleCols<3>(off) = last_pose_hessian_.middleCols<3>(off) * rot.transpose();
    }
  }
}

std::vector<std::pair<int, Measurement>> SlidingWindowEstimator::unbind_reid(int lm_id) {
  std::vector<std::pair<int, Measurement>> removed;
  for (auto& f : frames_) {
    for (size_t k = f.obs.size(); k-- > 0;) {
      if (f.obs_lm_ids[k] == lm_id && f.obs[k].is_reid) {
        removed.emplace_back(f.frame_id, f.obs[k]);
        f.obs.erase(f.obs.begin() + k);
        f.obs_lm_ids.erase(f.obs_lm_ids.begin() + k);
      }
    }
    std::erase(f.reid_lm_ids, lm_id);
  }
  LmRecord* rec = store_.find(lm_id);
  if (rec) {
    const int window_start = oldest_frame_id();
    std::erase_if(rec->meas,
                  [&](const Measurement& m) { return m.is_reid && m.frame_id >= window_start; });
    rec->augmented = false;
  }
  std::reverse(removed.begin(), removed.end());
  return removed;
}

bool SlidingWindowEstimator::has_frame(int frame_id) const {
  return frame(frame_id) != nullptr;
}

const WindowFrame* SlidingWindowEstimator::frame(int frame_id) const {
  for (const auto& f : frames_) {
    if (f.frame_id == frame_id) return &f;
  }
  return nullptr;
}

std::vector<int> SlidingWindowEstimator::tracked_landmarks() const {
  std::set<int> ids;
  for (const auto& f : frames_) ids.insert(f.obs_lm_ids.begin(), f.obs_lm_ids.end());
  return {ids.begin(), ids.end()};
}

}  // namespace revio
