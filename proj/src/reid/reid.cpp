#include "revio/reid/reid.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "revio/estimator/factors.hpp"

namespace revio::reid {

ViewZone compute_view_zone(const MapView::KfView& kf, const MapView& view) {
  Vec3 mean = Vec3::Zero();
  int n = 0;
  for (int id : kf.landmark_ids) {
    const auto it = view.landmarks.find(id);
    if (it == view.landmarks.end()) continue;
    mean += it->second.world_point;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("compute_view_zone: keyframe observes no landmarks");
  mean /= n;
  Vec3 var = Vec3::Zero();
  for (int id : kf.landmark_ids) {
    const auto it = view.landmarks.find(id);
    if (it == view.landmarks.end()) continue;
    var += (it->second.world_point - mean).cwiseAbs2();
  }
  var /= n;  // population variance
  const Vec3 spread = var.cwiseSqrt();
  return {mean - spread, mean + spread};
}

namespace {

STSSubmap fill_submap(int current_frame, const MapView& view, const std::vector<int>& candidates,
                      const std::vector<int>& window_tracked, int cap) {
  STSSubmap out;
  out.built_at_frame = current_frame;
  out.map_version = view.version;
  const std::set<int> tracked(window_tracked.begin(), window_tracked.end());
  std::set<int> seen;
  for (int kf_id : candidates) {  // ascending timestamp order
    const auto& kf = view.keyframes.at(kf_id);
    for (int lm_id : kf.landmark_ids) {
      if (cap > 0 && static_cast<int>(out.entries.size()) >= cap) return out;
      if (seen.contains(lm_id) || tracked.contains(lm_id)) continue;
      const auto lv = view.landmarks.find(lm_id);
      if (lv == view.landmarks.end()) continue;
      seen.insert(lm_id);
      out.entries.push_back({lm_id, kf_id, lv->second.world_point, lv->second.descriptor});
    }
  }
  return out;
}

}  // namespace

STSSubmap build_sts_submap(int current_frame, int reference_kf, const MapView& view,
                           const std::vector<int>& window_tracked, const ReidConfig& cfg) {
  STSSubmap empty;
  empty.built_at_frame = current_frame;
  empty.map_version = view.version;

  const auto ref_it = view.keyframes.find(reference_kf);
  if (ref_it == view.keyframes.end() || ref_it->second.landmark_ids.empty()) return empty;
  const ViewZone ref_zone = compute_view_zone(ref_it->second, view);

  std::vector<int> candidates;
  for (const auto& [id, kf] : view.keyframes) {  // ascending id == ascending timestamp
    if (current_frame - id < cfg.min_age) continue;
    if (kf.landmark_ids.empty()) continue;
    if (compute_view_zone(kf, view).intersects(ref_zone)) candidates.push_back(id);
  }
  if (candidates.empty()) return empty;
  return fill_submap(current_frame, view, candidates, window_tracked, cfg.t_map);
}

STSSubmap build_full_submap(int current_frame, const MapView& view,
                            const std::vector<int>& window_tracked, const ReidConfig& cfg) {
  (void)cfg;
  std::vector<int> candidates;
  for (const auto& [id, kf] : view.keyframes) {
    if (!kf.landmark_ids.empty()) candidates.push_back(id);
  }
  return fill_submap(current_frame, view, candidates, window_tracked, 0);
}

bool geometry_filter_keyframe(const MapView::KfView& kf, const MapView& view,
                              const Pose& predicted_pose_wb, const CameraIntrinsics& cam,
                              const sim::FrameObservations& current_obs, const ReidConfig& cfg) {
  const Pose cam_from_world = predicted_pose_wb.inverse();
  int in_view = 0;
  int close = 0;
  for (int lm_id : kf.landmark_ids) {
    const auto lv = view.landmarks.find(lm_id);
    if (lv == view.landmarks.end()) continue;
    const Vec3 x_cam = cam_from_world.act(lv->second.world_point);
    const auto px = project(cam, x_cam);
    if (!px || !cam.in_image(*px)) continue;
    ++in_view;
    for (const auto& e : current_obs.entries) {
      if ((e.left_px - *px).norm() <= cfg.r_geo) {
        ++close;
        break;
      }
    }
  }
  if (in_view == 0) return false;
  return close >= cfg.f_geo * in_view;
}

MatchResult match_features(const STSSubmap& submap, const MapView& view,
                           const Pose& predicted_pose_wb, const CameraIntrinsics& cam,
                           const sim::FrameObservations& current_obs, const ReidConfig& cfg,
                           bool pose_guided, const WarpFn& warp) {
  MatchResult result;
  if (submap.entries.empty()) return result;
  const Pose cam_from_world = predicted_pose_wb.inverse();

  // Projected pixel per entry under the predicted pose (pose-guided gate).
  std::vector<std::optional<Vec2>> projected(submap.entries.size());
  if (pose_guided) {
    for (size_t j = 0; j < submap.entries.size(); ++j) {
      const Vec3 x_cam = cam_from_world.act(submap.entries[j].world_point);
      projected[j] = project(cam, x_cam);
    }
  }

  struct Tentative {
    int distance;
    int lm_id;
    int obs_index;
  };
  std::vector<Tentative> tentative;

  for (size_t i = 0; i < current_obs.entries.size(); ++i) {
    const auto& feature = current_obs.entries[i];
    if (feature.track_age != 1) continue;  // only new detections are re-identified

    int best = 257, second = 257, best_lm = -1;
    for (size_t j = 0; j < submap.entries.size(); ++j) {
      const auto& entry = submap.entries[j];
      int dist;
      if (pose_guided) {
        if (!projected[j] || (*projected[j] - feature.left_px).norm() > 2.0 * cfg.r_geo) continue;
        // warp to the candidate's anchor viewpoint: residual appearance angle
        // is the gap between the observed angle and the predicted one
        const auto lv = view.landmarks.find(entry.landmark_id);
        if (lv == view.landmarks.end()) continue;
        const Vec3 dir_pred = (predicted_pose_wb.p - lv->second.world_point).normalized();
        const double cosang =
            std::clamp(lv->second.anchor_view_dir.dot(dir_pred), -1.0, 1.0);
        const double angle_pred = std::acos(cosang);
        const double eff = std::abs(feature.view_angle - angle_pred) + cfg.warp_floor_rad;
        dist = hamming_distance(warp(feature, eff), entry.descriptor);
      } else {
        dist = hamming_distance(feature.descriptor, entry.descriptor);
      }
      ++result.pairs_evaluated;
      if (dist < best) {
        second = best;
        best = dist;
        best_lm = entry.landmark_id;
      } else if (dist < second) {
        second = dist;
      }
    }
    if (best_lm < 0 || best >= cfg.t_dist) continue;
    if (cfg.ratio_test > 1.0 && second < 257 && second < cfg.ratio_test * best) continue;
    tentative.push_back({best, best_lm, static_cast<int>(i)});
  }

  std::sort(tentative.begin(), tentative.end(), [](const Tentative& a, const Tentative& b) {
    return std::tie(a.distance, a.lm_id, a.obs_index) < std::tie(b.distance, b.lm_id, b.obs_index);
  });

  std::set<int> used_lm, used_obs;
  for (const auto& t : tentative) {
    if (static_cast<int>(result.matches.size()) >= cfg.n_top) break;
    if (used_lm.contains(t.lm_id) || used_obs.contains(t.obs_index)) continue;
    used_lm.insert(t.lm_id);
    used_obs.insert(t.obs_index);
    result.matches.push_back({t.lm_id, t.obs_index, t.distance});
  }
  return result;
}

VerifyResult verify_reid(const LmRecord& rec, const Pose& anchor_pose, const StereoRig& rig,
                         const PoseLookup& poses, const ReidConfig& cfg) {
  if (rec.meas.empty()) throw std::logic_error("verify_reid: empty measurement set");
  double total = 0;
  int count = 0;
  const Pose right_from_body = rig.right_in_left.inverse();
  for (const auto& m : rec.meas) {
    const auto pose = poses(m.frame_id);
    if (!pose) continue;
    const auto left = project_body_residual(rig.left, Pose::identity(), *pose, anchor_pose,
                                            rec.bearing, rec.inv_depth, m.left);
    if (left) {
      total += left->residual.norm();
      ++count;
    }
    if (m.has_right) {
      const auto right = project_body_residual(rig.right, right_from_body, *pose, anchor_pose,
                                               rec.bearing, rec.inv_depth, m.right);
      if (right) {
        total += right->residual.norm();
        ++count;
      }
    }
  }
  if (count == 0) throw std::logic_error("verify_reid: no usable measurements");
  VerifyResult out;
  out.measurements = count;
  out.mean_error_px = total / count;
  out.keep = out.mean_error_px <= cfg.t_rep;
  return out;
}

}  // namespace revio::reid
