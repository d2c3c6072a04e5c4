#include "revio/pipeline.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace revio {

const char* run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kBaseline: return "baseline";
    case RunMode::kStsOnly: return "sts_only";
    case RunMode::kPgmOnly: return "pgm_only";
    case RunMode::kFull: return "full";
  }
  return "unknown";
}

RunMode run_mode_from_name(const std::string& name) {
  if (name == "baseline") return RunMode::kBaseline;
  if (name == "sts_only") return RunMode::kStsOnly;
  if (name == "pgm_only") return RunMode::kPgmOnly;
  if (name == "full" || name == "reid") return RunMode::kFull;
  throw std::invalid_argument("unknown run mode: " + name);
}

namespace {

Vec3 parse_vec3(const std::string& text, const Vec3& fallback) {
  if (text.empty()) return fallback;
  std::istringstream ss(text);
  Vec3 v;
  if (!(ss >> v.x() >> v.y() >> v.z())) throw std::runtime_error("config: bad vector: " + text);
  return v;
}

void check_known_keys(const io::Config& cfg,
                      const std::map<std::string, std::set<std::string>>& known) {
  for (const auto& [section, keys] : cfg.sections()) {
    const auto it = known.find(section);
    if (it == known.end()) throw std::runtime_error("config: unknown section [" + section + "]");
    for (const auto& [key, value] : keys) {
      if (!it->second.contains(key)) {
        throw std::runtime_error("config: unknown key " + section + "." + key);
      }
    }
  }
}

}  // namespace

PipelineConfig parse_pipeline_config(const io::Config& cfg) {
  check_known_keys(
      cfg, {{"world",
             {"trajectory", "radius", "period_s", "z_amplitude", "center", "landmarks",
              "wall_radius", "wall_height", "frame_rate", "imu_rate", "seed", "waypoints",
              "look", "lissajous_amp", "lissajous_freq", "fx", "baseline_m"}},
            {"imu",
             {"gyro_noise_density", "accel_noise_density", "gyro_bias_walk", "accel_bias_walk",
              "gravity", "noise", "true_bias_gyro", "true_bias_accel"}},
            {"breakage", {"forced_break_period", "occlusion_probability", "max_track_length"}},
            {"estimator",
             {"window_size", "pixel_sigma", "huber_delta_px", "keyframe_min_new_anchors",
              "keyframe_rotation_rad", "keyframe_translation_m", "max_iterations", "gba_max_iterations", "rel_cov_floor_rot", "rel_cov_floor_pos", "kf_bias_walk_inflation",
              "global_ba_every_kf", "min_disparity_px", "min_depth_m", "max_depth_m"}},
            {"reid",
             {"t_map", "t_dist", "t_rep", "r_geo", "f_geo", "n_top", "min_age", "ratio_test",
              "warp_floor_rad"}},
            {"run", {"frames", "pixel_noise_sigma", "mode", "seed", "threads"}}});

  PipelineConfig out;
  const std::string kind = cfg.get_string("world", "trajectory", "circle");
  if (kind == "circle") out.trajectory.kind = sim::TrajectoryKind::kCircle;
  else if (kind == "lissajous") out.trajectory.kind = sim::TrajectoryKind::kLissajous;
  else if (kind == "waypoints") out.trajectory.kind = sim::TrajectoryKind::kWaypoints;
  else throw std::runtime_error("config: unknown trajectory kind: " + kind);
  out.trajectory.radius = cfg.get_double("world", "radius", 3.0);
  out.trajectory.period_s = cfg.get_double("world", "period_s", 12.0);
  out.trajectory.z_amplitude = cfg.get_double("world", "z_amplitude", 0.15);
  out.trajectory.center = parse_vec3(cfg.get_string("world", "center", ""), Vec3(0, 0, 1.2));
  const std::string look = cfg.get_string("world", "look", "tangent");
  if (look == "tangent") out.trajectory.look = sim::LookDirection::kTangent;
  else if (look == "center") out.trajectory.look = sim::LookDirection::kCenter;
  else if (look == "outward") out.trajectory.look = sim::LookDirection::kOutward;
  else throw std::runtime_error("config: look must be tangent, center, or outward");
  out.trajectory.lissajous_amp =
      parse_vec3(cfg.get_string("world", "lissajous_amp", ""), Vec3(3.0, 2.0, 0.3));
  if (cfg.has("world", "waypoints")) {
    std::istringstream ss(cfg.get_string("world", "waypoints", ""));
    std::string part;
    while (std::getline(ss, part, ';')) {
      out.trajectory.waypoints.push_back(parse_vec3(part, Vec3::Zero()));
    }
  }
  out.n_landmarks = cfg.get_int("world", "landmarks", 240);
  out.wall_radius = cfg.get_double("world", "wall_radius", 8.0);
  out.wall_height = cfg.get_double("world", "wall_height", 3.0);
  out.frame_rate = cfg.get_double("world", "frame_rate", 20.0);
  out.imu_rate = cfg.get_double("world", "imu_rate", 200.0);
  out.world_seed = cfg.get_int("world", "seed", 1);

  ImuParams& imu = out.estimator.imu;
  imu.gyro_noise_density = cfg.get_double("imu", "gyro_noise_density", 2e-3);
  imu.accel_noise_density = cfg.get_double("imu", "accel_noise_density", 2e-2);
  imu.gyro_bias_walk = cfg.get_double("imu", "gyro_bias_walk", 1e-5);
  imu.accel_bias_walk = cfg.get_double("imu", "accel_bias_walk", 1e-4);
  imu.gravity = parse_vec3(cfg.get_string("imu", "gravity", ""), Vec3(0, 0, -9.81));
  out.imu_noise = cfg.get_bool("imu", "noise", true);
  out.true_bias.gyro = parse_vec3(cfg.get_string("imu", "true_bias_gyro", ""), Vec3::Zero());
  out.true_bias.accel = parse_vec3(cfg.get_string("imu", "true_bias_accel", ""), Vec3::Zero());

  out.breakage.forced_break_period = cfg.get_int("breakage", "forced_break_period", 0);
  out.breakage.occlusion_probability = cfg.get_double("breakage", "occlusion_probability", 0.0);
  out.breakage.max_track_length = cfg.get_int("breakage", "max_track_length", 1 << 30);

  EstimatorConfig& est = out.estimator;
  est.window_size = cfg.get_int("estimator", "window_size", 10);
  est.pixel_sigma = cfg.get_double("estimator", "pixel_sigma", 1.0);
  est.huber_delta_px = cfg.get_double("estimator", "huber_delta_px", 2.0);
  est.keyframe_min_new_anchors = cfg.get_int("estimator", "keyframe_min_new_anchors", 20);
  est.keyframe_rotation_rad = cfg.get_double("estimator", "keyframe_rotation_rad", 0.25);
  est.keyframe_translation_m = cfg.get_double("estimator", "keyframe_translation_m", 0.3);
  est.solver_max_iterations = cfg.get_int("estimator", "max_iterations", 20);
  est.gba_max_iterations = cfg.get_int("estimator", "gba_max_iterations", 10);
  est.rel_cov_floor_rot = cfg.get_double("estimator", "rel_cov_floor_rot", 2e-4);
  est.rel_cov_floor_pos = cfg.get_double("estimator", "rel_cov_floor_pos", 5e-4);
  est.kf_bias_walk_inflation = cfg.get_double("estimator", "kf_bias_walk_inflation", 50.0);
  est.min_disparity_px = cfg.get_double("estimator", "min_disparity_px", 1.0);
  est.min_depth_m = cfg.get_double("estimator", "min_depth_m", 0.2);
  est.max_depth_m = cfg.get_double("estimator", "max_depth_m", 80.0);
  out.global_ba_every_kf = cfg.get_int("estimator", "global_ba_every_kf", 5);

  reid::ReidConfig& rc = out.reid;
  rc.t_map = cfg.get_int("reid", "t_map", 1000);
  rc.t_dist = cfg.get_int("reid", "t_dist", 50);
  rc.t_rep = cfg.get_double("reid", "t_rep", 10.0);
  rc.r_geo = cfg.get_double("reid", "r_geo", 3.0);
  rc.f_geo = cfg.get_double("reid", "f_geo", 0.6);
  rc.n_top = cfg.get_int("reid", "n_top", 30);
  rc.min_age = cfg.get_int("reid", "min_age", 2 * est.window_size);
  rc.ratio_test = cfg.get_double("reid", "ratio_test", 1.2);
  rc.warp_floor_rad = cfg.get_double("reid", "warp_floor_rad", 0.05);

  out.n_frames = cfg.get_int("run", "frames", 600);
  out.pixel_noise_sigma = cfg.get_double("run", "pixel_noise_sigma", 1.0);
  out.mode = run_mode_from_name(cfg.get_string("run", "mode", "full"));
  out.seed = cfg.get_int("run", "seed", 0);
  const std::string threads = cfg.get_string("run", "threads", "sequential");
  if (threads == "sequential") out.parallel = false;
  else if (threads == "parallel") out.parallel = true;
  else throw std::runtime_error("config: threads must be sequential or parallel");

  est.rig = sim::default_rig();
  const double fx = cfg.get_double("world", "fx", est.rig.left.fx);
  est.rig.left.fx = est.rig.left.fy = fx;
  est.rig.right.fx = est.rig.right.fy = fx;
  const double baseline = cfg.get_double("world", "baseline_m", est.rig.baseline());
  est.rig.right_in_left = Pose(Quat::Identity(), Vec3(baseline, 0, 0));
  return out;
}

namespace {

// Background global-BA driver for the parallel thread mode.
class GbaWorker {
 public:
  GbaWorker(GlobalMap& map, SlidingWindowEstimator& est) : map_(map), est_(est) {
    thread_ = std::thread([this] { loop(); });
  }
  ~GbaWorker() { stop(); }

  void notify_keyframe() {
    {
      std::lock_guard lk(m_);
      ++new_kfs_;
    }
    cv_.notify_one();
  }

  // Applies any pending correction to the window; call at frame boundaries.
  void apply_pending() {
    std::optional<Pose> corr;
    {
      std::lock_guard lk(m_);
      corr = std::exchange(correction_, std::nullopt);
    }
    if (corr) est_.apply_world_correction(*corr);
  }

  void stop() {
    {
      std::lock_guard lk(m_);
      stop_ = true;
    }
    cv_.notify_one();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void loop() {
    while (true) {
      {
        std::unique_lock lk(m_);
        cv_.wait(lk, [this] { return stop_ || new_kfs_ > 0; });
        if (stop_) return;
        new_kfs_ = 0;
      }
      if (map_.size() < 2) continue;
      const auto result = map_.solve_global_ba();
      std::lock_guard lk(m_);
      correction_ = correction_ ? result.correction * *correction_ : result.correction;
    }
  }

  GlobalMap& map_;
  SlidingWindowEstimator& est_;
  std::thread thread_;
  std::mutex m_;
  std::condition_variable cv_;
  int new_kfs_ = 0;
  bool stop_ = false;
  std::optional<Pose> correction_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  const auto world =
      sim::make_cylinder_world(cfg.world_seed, cfg.n_landmarks, cfg.wall_radius, cfg.wall_height,
                               cfg.trajectory, cfg.estimator.rig, cfg.frame_rate, cfg.imu_rate);
  const auto gt = sim::generate_trajectory(world, cfg.n_frames);
  const auto imu =
      sim::generate_imu(world, cfg.n_frames, cfg.estimator.imu, cfg.imu_noise, cfg.true_bias, cfg.seed);
  sim::BreakageModel breakage = cfg.breakage;
  breakage.seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;
  const auto obs = sim::generate_observations(world, gt, breakage, cfg.pixel_noise_sigma, cfg.seed);

  LandmarkStore store;
  SlidingWindowEstimator est(cfg.estimator, store);
  GlobalMap gmap(cfg.estimator, store);
  est.set_initial_state(NavState{gt[0].pose_wb, gt[0].velocity, ImuBias{}});

  const auto warp_base = [&](const sim::ObservationEntry& e, int frame_id, double eff) {
    return sim::observation_descriptor(e.sim_landmark_id, frame_id, eff, world.seed, cfg.seed);
  };

  PipelineResult result;
  std::vector<SlidingWindowEstimator::ExitRecord> raw_exits;
  std::map<int, int> track_to_lm;
  std::set<int> reid_tracks;  // tracks currently bound through re-identification
  int kfs_since_gba = 0;

  std::optional<GbaWorker> worker;
  if (cfg.parallel) worker.emplace(gmap, est);

  for (int f = 0; f < cfg.n_frames; ++f) {
    if (worker) worker->apply_pending();
    MapView view = gmap.snapshot();

    // IMU chunk covering [previous frame, this frame]; chunks share the
    // boundary sample.
    FrameInput input;
    input.frame_id = f;
    input.timestamp = gt[f].timestamp;
    if (f > 0) {
      const double t0 = gt[f - 1].timestamp - 1e-12;
      const double t1 = gt[f].timestamp + 1e-12;
      auto it = std::lower_bound(imu.begin(), imu.end(), t0,
                                 [](const ImuSample& s, double t) { return s.t < t; });
      for (; it != imu.end() && it->t <= t1; ++it) input.imu.push_back(*it);
    }

    // ---- re-identification against the map (before local BA)
    reid::ReidFrameLog log;
    log.frame_id = f;
    std::map<int, int> matched_track_to_lm;     // this frame's fresh bindings
    std::map<int, int> matched_lm_to_obs_index;
    std::map<int, int> matched_lm_to_distance;
    if (cfg.mode != RunMode::kBaseline && !view.empty() && f > 0 && !est.frames().empty()) {
      const auto& prev = est.frames().back();
      Pose predicted = prev.state.pose_wb;
      if (input.imu.size() >= 2) {
        const auto pred = predict_state(prev.state.pose_wb,
                                        ImuState{prev.state.velocity, prev.state.bias},
                                        std::span<const ImuSample>(input.imu), cfg.estimator.imu);
        predicted = pred.pose;
      }

      const bool use_sts = cfg.mode == RunMode::kStsOnly || cfg.mode == RunMode::kFull;
      const bool pose_guided = cfg.mode == RunMode::kPgmOnly || cfg.mode == RunMode::kFull;

      reid::STSSubmap submap;
      if (use_sts) {
        const int reference_kf = view.keyframes.rbegin()->first;
        submap = reid::build_sts_submap(f, reference_kf, view, est.tracked_landmarks(), cfg.reid);
        ++result.submap_builds;
      } else {
        submap = reid::build_full_submap(f, view, est.tracked_landmarks(), cfg.reid);
      }

      if (pose_guided && !submap.entries.empty()) {
        // drop entries of keyframes that fail the drift-consistency test
        std::set<int> source_kfs;
        for (const auto& e : submap.entries) source_kfs.insert(e.source_kf);
        std::set<int> bad;
        for (int kf_id : source_kfs) {
          if (!reid::geometry_filter_keyframe(view.keyframes.at(kf_id), view, predicted,
                                              cfg.estimator.rig.left, obs[f], cfg.reid)) {
            bad.insert(kf_id);
          }
        }
        if (!bad.empty()) {
          std::erase_if(submap.entries,
                        [&](const reid::SubmapEntry& e) { return bad.contains(e.source_kf); });
        }
      }
      log.submap_size = static_cast<int>(submap.entries.size());

      const reid::WarpFn warp = [&](const sim::ObservationEntry& e, double eff) {
        return warp_base(e, f, eff);
      };
      const auto matched = reid::match_features(submap, view, predicted, cfg.estimator.rig.left,
                                                obs[f], cfg.reid, pose_guided, warp);
      log.candidates_considered = matched.pairs_evaluated;
      for (const auto& m : matched.matches) {
        const auto& entry = obs[f].entries[m.obs_index];
        matched_track_to_lm[entry.track_id] = m.landmark_id;
        matched_lm_to_obs_index[m.landmark_id] = m.obs_index;
        matched_lm_to_distance[m.landmark_id] = m.distance;
      }
      result.max_submap_size = std::max(result.max_submap_size, log.submap_size);
    }

    // ---- measurement registration
    for (const auto& e : obs[f].entries) {
      FrameInputItem item;
      item.track_id = e.track_id;
      item.left = e.left_px;
      item.has_right = true;
      item.right = e.right_px;
      item.descriptor = e.descriptor;
      item.sim_id = e.sim_landmark_id;

      const auto bound = track_to_lm.find(e.track_id);
      if (bound != track_to_lm.end()) {
        const LmRecord* rec = store.find(bound->second);
        if (rec && (rec->active || rec->exported)) {
          item.lm_id = bound->second;
          item.is_reid = reid_tracks.contains(e.track_id);
        }
      } else if (const auto m = matched_track_to_lm.find(e.track_id);
                 m != matched_track_to_lm.end()) {
        item.lm_id = m->second;
        item.is_reid = true;
      }
      input.items.push_back(item);
    }

    for (const auto& [track, lm] : est.add_frame(input, view)) track_to_lm[track] = lm;
    for (const auto& [track, lm] : matched_track_to_lm) {
      track_to_lm[track] = lm;
      reid_tracks.insert(track);
    }

    // new keyframes must be in the map before the solve so their anchored
    // landmarks resolve as fixed anchors
    bool inserted = false;
    for (const auto& pkg : est.take_packages()) {
      gmap.insert_keyframe(pkg);
      ++result.keyframes;
      ++kfs_since_gba;
      inserted = true;
      if (worker) worker->notify_keyframe();
    }
    if (inserted) view = gmap.snapshot();

    if (est.frames().size() >= 2) {
      const auto report = est.solve_local_ba(view);
      for (size_t i = 1; i < report.stats.accepted_costs.size(); ++i) {
        if (report.stats.accepted_costs[i] > report.stats.accepted_costs[i - 1]) {
          result.local_costs_monotone = false;
        }
      }
    }

    // ---- Eq. 6 verification of this frame's fresh bindings
    const auto pose_lookup = [&](int frame_id) -> std::optional<Pose> {
      if (const WindowFrame* wf = est.frame(frame_id)) return wf->state.pose_wb;
      const auto kf = view.keyframes.find(frame_id);
      if (kf != view.keyframes.end()) return kf->second.pose_wb;
      return std::nullopt;
    };
    // fresh bindings from this frame plus continuing augmented tracks
    std::vector<std::pair<int, int>> to_verify;  // (track, landmark)
    for (const auto& [track, lm_id] : matched_track_to_lm) to_verify.emplace_back(track, lm_id);
    for (const auto& e : obs[f].entries) {
      if (!reid_tracks.contains(e.track_id)) continue;
      const auto bound = track_to_lm.find(e.track_id);
      if (bound != track_to_lm.end() && !matched_track_to_lm.contains(e.track_id)) {
        to_verify.emplace_back(e.track_id, bound->second);
      }
    }
    for (const auto& [track, lm_id] : to_verify) {
      const bool fresh_binding = matched_track_to_lm.contains(track);
      const LmRecord* rec = store.find(lm_id);
      if (!rec) continue;
      const auto lv = view.landmarks.find(lm_id);
      if (lv == view.landmarks.end()) continue;
      const auto kf = view.keyframes.find(lv->second.anchor_kf);
      if (kf == view.keyframes.end()) continue;
      const auto verdict = reid::verify_reid(*rec, kf->second.pose_wb, cfg.estimator.rig,
                                             pose_lookup, cfg.reid);
      if (verdict.keep) {
        if (!fresh_binding) continue;
        store.at(lm_id).augmented = true;
        ++log.matches_accepted;
        ++result.reid_accepted;
        result.max_accepted_distance =
            std::max(result.max_accepted_distance, matched_lm_to_distance.at(lm_id));
        const int obs_index = matched_lm_to_obs_index.at(lm_id);
        if (obs[f].entries[obs_index].sim_landmark_id == rec->sim_id) ++result.reid_correct;
      } else {
        ++log.matches_discarded;
        ++result.reid_discarded;
        if (!fresh_binding) store.at(lm_id).augmented = false;
        const auto removed = est.unbind_reid(lm_id);
        reid_tracks.erase(track);
        track_to_lm.erase(track);
        // fall back to a fresh track anchored at this frame
        for (const auto& [frame_id, meas] : removed) {
          if (frame_id != f) continue;
          const int fresh = est.anchor_new_landmark(f, meas, rec->descriptor, rec->sim_id);
          if (fresh >= 0) track_to_lm[track] = fresh;
          break;
        }
      }
    }
    result.reid_log.push_back(log);

    // ---- sequential global BA cadence
    // dense cadence while the map is young: freshly exported landmarks carry
    // raw stereo depths and need refinement before they can anchor the window
    const int cadence = static_cast<int>(gmap.size()) < 3 * cfg.global_ba_every_kf
                            ? 1
                            : cfg.global_ba_every_kf;
    if (!cfg.parallel && kfs_since_gba >= cadence && gmap.size() >= 2) {
      const auto gba = gmap.solve_global_ba();
      for (size_t i = 1; i < gba.stats.accepted_costs.size(); ++i) {
        if (gba.stats.accepted_costs[i] > gba.stats.accepted_costs[i - 1]) {
          result.global_costs_monotone = false;
        }
      }
      est.apply_world_correction(gba.correction);
      kfs_since_gba = 0;
    }

    for (const auto& exit : est.take_exits()) raw_exits.push_back(exit);
  }

  if (worker) worker->stop();

  // final smoothing pass over what remains
  if (gmap.size() >= 2 && (cfg.parallel || kfs_since_gba > 0)) {
    const auto gba = gmap.solve_global_ba();
    for (size_t i = 1; i < gba.stats.accepted_costs.size(); ++i) {
      if (gba.stats.accepted_costs[i] > gba.stats.accepted_costs[i - 1]) {
        result.global_costs_monotone = false;
      }
    }
    est.apply_world_correction(gba.correction);
  }
  for (const auto& exit : est.take_exits()) raw_exits.push_back(exit);

  // Re-home each recorded pose through its reference keyframe: compose the
  // pose relative to the keyframe's state at exit time with the keyframe's
  // final map state. Frames still in the window are already in the final
  // world frame.
  {
    std::map<int, Pose> exit_pose;
    for (const auto& e : raw_exits) exit_pose[e.frame_id] = e.pose_wb;
    const auto kf_ids = gmap.keyframe_ids();
    int kf_idx = -1;
    Pose correction = Pose::identity();
    for (const auto& e : raw_exits) {
      while (kf_idx + 1 < static_cast<int>(kf_ids.size()) && kf_ids[kf_idx + 1] <= e.frame_id) {
        ++kf_idx;
        const int kf = kf_ids[kf_idx];
        const auto final_state = gmap.keyframe_state(kf);
        correction = final_state->pose_wb * exit_pose.at(kf).inverse();
      }
      result.estimate.push(e.timestamp, correction * e.pose_wb);
    }
    for (const auto& fr : est.frames()) result.estimate.push(fr.timestamp, fr.state.pose_wb);
  }

  // Final Eq. 6 sweep: discard re-identified points that no longer hold up,
  // then record the worst surviving mean.
  {
    const MapView view = gmap.snapshot();
    const auto pose_lookup = [&](int frame_id) -> std::optional<Pose> {
      if (const WindowFrame* wf = est.frame(frame_id)) return wf->state.pose_wb;
      const auto kf = view.keyframes.find(frame_id);
      if (kf != view.keyframes.end()) return kf->second.pose_wb;
      return std::nullopt;
    };
    for (auto& [id, rec] : store.records()) {
      if (!rec.augmented) continue;
      const auto lv = view.landmarks.find(id);
      if (lv == view.landmarks.end()) continue;
      const auto kf = view.keyframes.find(lv->second.anchor_kf);
      if (kf == view.keyframes.end()) continue;
      const auto verdict =
          reid::verify_reid(rec, kf->second.pose_wb, cfg.estimator.rig, pose_lookup, cfg.reid);
      if (!verdict.keep) {
        std::erase_if(rec.meas, [](const Measurement& m) { return m.is_reid; });
        rec.augmented = false;
        ++result.reid_discarded;
        continue;
      }
      result.worst_surviving_reid_mean_px =
          std::max(result.worst_surviving_reid_mean_px, verdict.mean_error_px);
    }
  }

  for (const auto& s : gt) result.ground_truth.push(s.timestamp, s.pose_wb);
  result.ate_rmse = eval::ate_rmse(result.estimate, result.ground_truth);

  std::vector<eval::TrackRow> rows;
  for (const auto& [id, rec] : store.records()) {
    if (rec.meas.empty()) continue;
    rows.push_back({rec.first_frame, rec.meas.back().frame_id,
                    static_cast<int>(rec.meas.size())});
  }
  if (!rows.empty()) result.tracks = eval::track_stats(rows);
  result.map_version = gmap.version();
  result.map_dump = gmap.dump();
  return result;
}

std::string format_reid_log(const std::vector<reid::ReidFrameLog>& log) {
  std::string out = "frame,submap_size,candidates_considered,matches_accepted,matches_discarded\n";
  char line[128];
  for (const auto& row : log) {
    std::snprintf(line, sizeof(line), "%d,%d,%d,%d,%d\n", row.frame_id, row.submap_size,
                  row.candidates_considered, row.matches_accepted, row.matches_discarded);
    out += line;
  }
  return out;
}

std::string format_metrics(const PipelineResult& result) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "ate_rmse_m: %.9g\n"
                "ats_frames: %.9g\n"
                "atl_frames: %.9g\n"
                "landmarks: %d\n"
                "keyframes: %d\n"
                "reid_accepted: %d\n"
                "reid_correct: %d\n"
                "reid_discarded: %d\n"
                "submap_builds: %d\n"
                "map_version: %llu\n",
                result.ate_rmse, result.tracks.ats, result.tracks.atl, result.tracks.landmarks,
                result.keyframes, result.reid_accepted, result.reid_correct, result.reid_discarded,
                result.submap_builds, static_cast<unsigned long long>(result.map_version));
  return buf;
}

std::vector<AblationRow> run_ablation(const PipelineConfig& base,
                                      const std::vector<std::uint64_t>& seeds) {
  std::vector<AblationRow> rows;
  for (const RunMode mode :
       {RunMode::kBaseline, RunMode::kStsOnly, RunMode::kPgmOnly, RunMode::kFull}) {
    AblationRow row;
    row.mode = mode;
    for (const auto seed : seeds) {
      PipelineConfig cfg = base;
      cfg.mode = mode;
      cfg.seed = seed;
      const auto result = run_pipeline(cfg);
      row.per_seed.push_back(result.ate_rmse);
      row.mean_ate += result.ate_rmse;
    }
    row.mean_ate /= static_cast<double>(seeds.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation(const std::vector<AblationRow>& rows) {
  std::string out = "mode,mean_ate_m,per_seed\n";
  for (const auto& row : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s,%.9g,", run_mode_name(row.mode), row.mean_ate);
    out += buf;
    for (size_t i = 0; i < row.per_seed.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.9g", i ? ";" : "", row.per_seed[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace revio
