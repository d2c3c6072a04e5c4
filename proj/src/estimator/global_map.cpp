#include "revio/estimator/global_map.hpp"
#include "revio/imu_residual.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace revio {

namespace {

struct HuberWeight {
  double cost;
  double scale;
};

HuberWeight huber(const Vec2& r, double delta, double sigma) {
  const double e = r.norm();
  const double inv_var = 1.0 / (sigma * sigma);
  if (e <= delta) return {0.5 * e * e * inv_var, std::sqrt(inv_var)};
  return {(delta * e - 0.5 * delta * delta) * inv_var, std::sqrt(delta / e * inv_var)};
}

}  // namespace

void GlobalMap::insert_keyframe(const KeyframePackage& pkg) {
  std::lock_guard lock(mutex_);
  if (!keyframes_.empty() && pkg.frame_id <= keyframes_.rbegin()->first) {
    throw std::invalid_argument("insert_keyframe: id must be newer than all existing keyframes");
  }
  KeyframeRecord rec;
  rec.id = pkg.frame_id;
  rec.timestamp = pkg.timestamp;
  rec.state = pkg.state;
  rec.obs = pkg.obs;
  rec.obs_lm_ids = pkg.obs_lm_ids;
  rec.reid_lm_ids = pkg.reid_lm_ids;
  rec.anchored_lm_ids = pkg.anchored_lm_ids;
  rec.preint_from_prev = pkg.preint_from_prev_kf;
  rec.rel_from_prev = pkg.rel_from_prev_kf;
  keyframes_.emplace(rec.id, std::move(rec));

  for (int lm_id : pkg.anchored_lm_ids) {
    if (LmRecord* lm = store_.find(lm_id)) lm->exported = true;
  }
  ++version_;
}

MapView GlobalMap::snapshot() const {
  std::lock_guard lock(mutex_);
  MapView view;
  view.version = version_;
  for (const auto& [id, kf] : keyframes_) {
    MapView::KfView kv;
    kv.id = id;
    kv.ts = kf.timestamp;
    kv.pose_wb = kf.state.pose_wb;
    for (int lm_id : kf.obs_lm_ids) {
      const LmRecord* rec = store_.find(lm_id);
      if (rec && rec->exported) kv.landmark_ids.push_back(lm_id);
    }
    std::sort(kv.landmark_ids.begin(), kv.landmark_ids.end());
    kv.landmark_ids.erase(std::unique(kv.landmark_ids.begin(), kv.landmark_ids.end()),
                          kv.landmark_ids.end());
    view.keyframes.emplace(id, std::move(kv));
  }
  for (const auto& [id, rec] : store_.records()) {
    if (!rec.exported) continue;
    const auto kf = keyframes_.find(rec.anchor_frame);
    if (kf == keyframes_.end()) continue;
    MapView::LmView lv;
    lv.id = id;
    lv.anchor_kf = rec.anchor_frame;
    lv.bearing = rec.bearing;
    lv.inv_depth = rec.inv_depth;
    lv.descriptor = rec.descriptor;
    lv.world_point = kf->second.state.pose_wb.act(rec.bearing / rec.inv_depth);
    const Vec3 to_cam = kf->second.state.pose_wb.p - lv.world_point;
    lv.anchor_view_dir = to_cam.norm() > 1e-12 ? Vec3(to_cam.normalized()) : Vec3(0, 0, 1);
    lv.sim_id = rec.sim_id;
    view.landmarks.emplace(id, std::move(lv));
  }
  return view;
}

std::size_t GlobalMap::size() const {
  std::lock_guard lock(mutex_);
  return keyframes_.size();
}

std::uint64_t GlobalMap::version() const {
  std::lock_guard lock(mutex_);
  return version_;
}

std::vector<int> GlobalMap::keyframe_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<int> ids;
  ids.reserve(keyframes_.size());
  for (const auto& [id, kf] : keyframes_) ids.push_back(id);
  return ids;
}

std::optional<NavState> GlobalMap::keyframe_state(int id) const {
  std::lock_guard lock(mutex_);
  const auto it = keyframes_.find(id);
  if (it == keyframes_.end()) return std::nullopt;
  return it->second.state;
}

// ---------------------------------------------------------------------------

struct GlobalMap::GbaInput {
  struct Kf {
    int id;
    NavState state;
    std::vector<Measurement> obs;
    std::vector<int> obs_lm_ids;
    std::optional<Preintegrated> preint;
    std::optional<RelConstraint> rel;
  };
  struct Lm {
    int id;
    int anchor_kf;
    Vec3 bearing;
    double inv_depth;
  };
  std::vector<Kf> kfs;                 // ascending id
  std::vector<Lm> lms;                 // ascending id
  std::map<int, int> kf_offset;        // id -> tangent offset
  std::map<int, int> lm_index;         // id -> index into lms
  int newest_kf_id = -1;
};

namespace {

class GlobalProblem : public LeastSquaresProblem {
 public:
  GlobalProblem(GlobalMap::GbaInput& in, const EstimatorConfig& cfg)
      : in_(in), cfg_(cfg), imu_params_(cfg.imu) {
    imu_params_.gyro_bias_walk *= cfg.kf_bias_walk_inflation;
    imu_params_.accel_bias_walk *= cfg.kf_bias_walk_inflation;
    Vec15 info;
    info << Vec6::Constant(1e8), Vec3::Constant(1.0), Vec3::Constant(1.0), Vec3::Constant(1.0);
    gauge_ = PriorFactor::diagonal(in_.kfs.front().state, info);
    rel_sqrt_info_.resize(in_.kfs.size());
    for (size_t i = 1; i < in_.kfs.size(); ++i) {
      if (!in_.kfs[i].rel) continue;
      const Eigen::LLT<Mat6> llt(in_.kfs[i].rel->covariance);
      rel_sqrt_info_[i] = llt.matrixL().solve(Mat6::Identity());
    }
    // freeze measurements that are invalid at the entry state
    skip_.resize(in_.kfs.size());
    for (size_t i = 0; i < in_.kfs.size(); ++i) {
      skip_[i].assign(in_.kfs[i].obs.size(), false);
      for (size_t k = 0; k < in_.kfs[i].obs.size(); ++k) {
        if (!eval_visual(i, k, nullptr, nullptr)) skip_[i][k] = true;
      }
    }
  }

  int pose_dim() const override { return static_cast<int>(in_.kfs.size()) * 15; }
  int landmark_count() const override { return static_cast<int>(in_.lms.size()); }

  std::optional<double> evaluate(NormalEquations* normals) override {
    double cost = 0;
    double dbg_gauge = 0, dbg_imu = 0, dbg_rel = 0, dbg_vis = 0;

    const auto gauge_ev = gauge_.evaluate(in_.kfs.front().state);
    cost += 0.5 * gauge_ev.residual.squaredNorm();
    dbg_gauge = cost;
    if (normals) normals->add_dense({{0, gauge_ev.jacobian}}, gauge_ev.residual);

    for (size_t i = 1; i < in_.kfs.size(); ++i) {
      const auto& prev = in_.kfs[i - 1];
      const auto& cur = in_.kfs[i];
      const int off_prev = static_cast<int>(15 * (i - 1));
      const int off_cur = static_cast<int>(15 * i);
      if (cur.preint) {
        const auto ev = imu_residual(prev.state.pose_wb, ImuState{prev.state.velocity, prev.state.bias},
                                     cur.state.pose_wb, ImuState{cur.state.velocity, cur.state.bias},
                                     *cur.preint, imu_params_);
        cost += 0.5 * ev.residual.squaredNorm();
        dbg_imu += 0.5 * ev.residual.squaredNorm();
        if (normals) {
          normals->add_dense({{off_prev, Eigen::MatrixXd(ev.jac_i)},
                              {off_cur, Eigen::MatrixXd(ev.jac_j)}},
                             ev.residual);
        }
      }
      if (cur.rel) {
        const auto ev = relative_pose_residual(prev.state.pose_wb, cur.state.pose_wb, *cur.rel);
        const Vec6 wr = rel_sqrt_info_[i] * ev.residual;
        cost += 0.5 * wr.squaredNorm();
        dbg_rel += 0.5 * wr.squaredNorm();
        if (normals) {
          // pose tangent occupies the first 6 of each 15-dim block
          Eigen::MatrixXd ja = Eigen::MatrixXd::Zero(6, 15);
          Eigen::MatrixXd jb = Eigen::MatrixXd::Zero(6, 15);
          ja.leftCols<6>() = rel_sqrt_info_[i] * ev.jac_a;
          jb.leftCols<6>() = rel_sqrt_info_[i] * ev.jac_b;
          normals->add_dense({{off_prev, ja}, {off_cur, jb}}, wr);
        }
      }
    }

    for (size_t i = 0; i < in_.kfs.size(); ++i) {
      for (size_t k = 0; k < in_.kfs[i].obs.size(); ++k) {
        if (skip_[i][k]) continue;
        double c = 0;
        if (!eval_visual(i, k, normals, &c)) return std::nullopt;
        cost += c;
        dbg_vis += c;
      }
    }
    if (getenv("REVIO_DEBUG_GBA") && normals) {
      std::fprintf(stderr, "[gba] gauge %.3e imu %.3e rel %.3e vis %.3e\n", dbg_gauge, dbg_imu,
                   dbg_rel, dbg_vis);
    }
    return cost;
  }

  void apply_step(const Eigen::VectorXd& d_pose, const Eigen::VectorXd& d_lm) override {
    for (size_t i = 0; i < in_.kfs.size(); ++i) {
      in_.kfs[i].state = in_.kfs[i].state.retract(Vec15(d_pose.segment<15>(15 * i)));
    }
    for (size_t j = 0; j < in_.lms.size(); ++j) in_.lms[j].inv_depth += d_lm[j];
  }

  void save_state() override {
    saved_states_.clear();
    for (const auto& kf : in_.kfs) saved_states_.push_back(kf.state);
    saved_depths_.clear();
    for (const auto& lm : in_.lms) saved_depths_.push_back(lm.inv_depth);
  }

  void restore_state() override {
    for (size_t i = 0; i < in_.kfs.size(); ++i) in_.kfs[i].state = saved_states_[i];
    for (size_t j = 0; j < in_.lms.size(); ++j) in_.lms[j].inv_depth = saved_depths_[j];
  }

 private:
  bool eval_visual(size_t i, size_t k, NormalEquations* normals, double* cost) {
    const auto& kf = in_.kfs[i];
    const auto lm_it = in_.lm_index.find(kf.obs_lm_ids[k]);
    if (lm_it == in_.lm_index.end()) return true;
    const auto& lm = in_.lms[lm_it->second];
    if (!(lm.inv_depth > 0)) return false;
    const int off_anchor = in_.kf_offset.at(lm.anchor_kf);
    const Pose& anchor_pose = in_.kfs[off_anchor / 15].state.pose_wb;
    const bool at_anchor = kf.id == lm.anchor_kf;
    const Measurement& m = kf.obs[k];
    const int off_i = static_cast<int>(15 * i);

    if (!at_anchor) {
      const auto ev = project_body_residual(cfg_.rig.left, Pose::identity(), kf.state.pose_wb,
                                            anchor_pose, lm.bearing, lm.inv_depth, m.left);
      if (!ev) return false;
      const auto w = huber(ev->residual, cfg_.huber_delta_px, cfg_.pixel_sigma);
      if (cost) *cost += w.cost;
      if (normals) {
        normals->add_visual(off_i, w.scale * ev->jac_pose_i, off_anchor,
                            w.scale * ev->jac_pose_anchor, lm_it->second,
                            Vec2(w.scale * ev->jac_inv_depth), Vec2(w.scale * ev->residual));
      }
    }
    if (m.has_right) {
      const auto ev = project_body_residual(cfg_.rig.right, cfg_.rig.right_in_left.inverse(),
                                            kf.state.pose_wb, anchor_pose, lm.bearing, lm.inv_depth,
                                            m.right);
      if (!ev) return false;
      const auto w = huber(ev->residual, cfg_.huber_delta_px, cfg_.pixel_sigma);
      if (cost) *cost += w.cost;
      if (normals) {
        if (at_anchor) {
          normals->add_visual(-1, {}, -1, {}, lm_it->second, Vec2(w.scale * ev->jac_inv_depth),
                              Vec2(w.scale * ev->residual));
        } else {
          normals->add_visual(off_i, w.scale * ev->jac_pose_i, off_anchor,
                              w.scale * ev->jac_pose_anchor, lm_it->second,
                              Vec2(w.scale * ev->jac_inv_depth), Vec2(w.scale * ev->residual));
        }
      }
    }
    return true;
  }

  GlobalMap::GbaInput& in_;
  const EstimatorConfig& cfg_;
  ImuParams imu_params_;
  PriorFactor gauge_;
  std::vector<Mat6> rel_sqrt_info_;
  std::vector<std::vector<bool>> skip_;
  std::vector<NavState> saved_states_;
  std::vector<double> saved_depths_;
};

}  // namespace

GlobalMap::GbaResult GlobalMap::solve_global_ba() {
  GbaInput input;
  {
    std::lock_guard lock(mutex_);
    if (keyframes_.size() < 2) {
      throw std::invalid_argument("solve_global_ba: need at least 2 keyframes");
    }
    for (const auto& [id, kf] : keyframes_) {
      input.kf_offset[id] = static_cast<int>(input.kfs.size()) * 15;
      input.kfs.push_back({id, kf.state, kf.obs, kf.obs_lm_ids, kf.preint_from_prev,
                           kf.rel_from_prev});
    }
    input.newest_kf_id = input.kfs.back().id;
    for (const auto& [id, rec] : store_.records()) {
      if (!rec.exported || !keyframes_.contains(rec.anchor_frame)) continue;
      input.lm_index[id] = static_cast<int>(input.lms.size());
      input.lms.push_back({id, rec.anchor_frame, rec.bearing, rec.inv_depth});
    }
  }

  GlobalProblem problem(input, cfg_);
  LmOptions opts;
  opts.max_iterations = cfg_.gba_max_iterations;
  const LmStats stats = lm_solve(problem, opts);
  return commit(input, stats);
}

GlobalMap::GbaResult GlobalMap::commit(const GbaInput& input, const LmStats& stats) {
  std::lock_guard lock(mutex_);
  GbaResult result;
  result.stats = stats;

  const NavState& newest_old = keyframes_.at(input.newest_kf_id).state;
  const NavState& newest_new = input.kfs.back().state;
  result.correction = newest_new.pose_wb * newest_old.pose_wb.inverse();

  for (const auto& kf : input.kfs) keyframes_.at(kf.id).state = kf.state;
  // keyframes inserted after the snapshot follow their nearest optimized
  // ancestor's correction
  for (auto& [id, kf] : keyframes_) {
    if (id <= input.newest_kf_id) continue;
    kf.state.pose_wb = result.correction * kf.state.pose_wb;
    kf.state.velocity = result.correction.q * kf.state.velocity;
  }
  for (const auto& lm : input.lms) {
    if (LmRecord* rec = store_.find(lm.id)) rec->inv_depth = lm.inv_depth;
  }
  ++version_;
  result.version = version_;
  return result;
}

std::string GlobalMap::dump() const {
  std::lock_guard lock(mutex_);
  std::string out = "[KEYFRAMES]\n";
  char line[256];
  for (const auto& [id, kf] : keyframes_) {
    const Pose& t = kf.state.pose_wb;
    std::snprintf(line, sizeof(line), "%d %.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", id,
                  kf.timestamp, t.p.x(), t.p.y(), t.p.z(), t.q.x(), t.q.y(), t.q.z(), t.q.w());
    out += line;
  }
  out += "[LANDMARKS]\n";
  for (const auto& [id, rec] : store_.records()) {
    if (!rec.exported) continue;
    std::snprintf(line, sizeof(line), "%d %d %.9g ", id, rec.anchor_frame, rec.inv_depth);
    out += line;
    out += rec.descriptor.to_hex();
    out += '\n';
  }
  return out;
}

}  // namespace revio
