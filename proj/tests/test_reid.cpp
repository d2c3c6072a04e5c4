#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "revio/reid/reid.hpp"
#include "revio/sim/simulator.hpp"
#include "test_util.hpp"

using namespace revio;
using namespace revio::reid;

namespace {

// Hand-built map: keyframes on a line of ids, each observing the listed
// landmarks placed at given world points.
struct MapBuilder {
  MapView view;
  int next_lm = 0;

  void add_keyframe(int id, const Pose& pose, const std::vector<Vec3>& points,
                    std::uint64_t desc_seed = 1) {
    MapView::KfView kf;
    kf.id = id;
    kf.ts = id * 0.05;
    kf.pose_wb = pose;
    for (const auto& p : points) {
      MapView::LmView lm;
      lm.id = next_lm++;
      lm.anchor_kf = id;
      lm.world_point = p;
      lm.descriptor = sim::canonical_descriptor(lm.id, desc_seed);
      const Vec3 to_cam = pose.p - p;
      lm.anchor_view_dir = to_cam.normalized();
      lm.sim_id = lm.id;
      // bearing/inv_depth consistent with the anchor pose
      const Vec3 x_cam = pose.inverse().act(p);
      lm.bearing = Vec3(x_cam.x() / x_cam.z(), x_cam.y() / x_cam.z(), 1.0);
      lm.inv_depth = 1.0 / x_cam.z();
      kf.landmark_ids.push_back(lm.id);
      view.landmarks.emplace(lm.id, std::move(lm));
    }
    view.keyframes.emplace(id, std::move(kf));
  }
};

CameraIntrinsics cam() { return CameraIntrinsics{400, 400, 320, 240, 640, 480}; }

}  // namespace

TEST_CASE("view zone: degenerate and two-point cases") {
  MapBuilder b;
  b.add_keyframe(0, Pose(), {Vec3(1, 2, 3)});
  auto zone = compute_view_zone(b.view.keyframes.at(0), b.view);
  CHECK((zone.lo - Vec3(1, 2, 3)).norm() < 1e-12);
  CHECK((zone.hi - Vec3(1, 2, 3)).norm() < 1e-12);

  MapBuilder b2;
  b2.add_keyframe(0, Pose(Quat::Identity(), Vec3(1, 0, -2)), {Vec3(0, 0, 0), Vec3(2, 0, 0)});
  zone = compute_view_zone(b2.view.keyframes.at(0), b2.view);
  CHECK((zone.lo - Vec3(0, 0, 0)).norm() < 1e-12);  // population variance: S = (1,0,0)
  CHECK((zone.hi - Vec3(2, 0, 0)).norm() < 1e-12);

  MapView::KfView empty_kf;
  CHECK_THROWS_AS(compute_view_zone(empty_kf, b2.view), std::invalid_argument);
}

TEST_CASE("view zone: symmetric about the mean for random clouds") {
  MapBuilder b;
  std::vector<Vec3> pts;
  Vec3 mean = Vec3::Zero();
  for (int i = 0; i < 40; ++i) {
    pts.push_back(test::random_vec3(4.0));
    mean += pts.back();
  }
  mean /= 40;
  b.add_keyframe(0, Pose(Quat::Identity(), Vec3(0, 0, -10)), pts);
  const auto zone = compute_view_zone(b.view.keyframes.at(0), b.view);
  CHECK(((zone.lo + zone.hi) / 2 - mean).norm() < 1e-9);
  CHECK((zone.lo.array() <= mean.array()).all());
  CHECK((zone.hi.array() >= mean.array()).all());
}

TEST_CASE("zone intersection is interval arithmetic") {
  const ViewZone a{Vec3(0, 0, 0), Vec3(1, 1, 1)};
  CHECK(a.intersects(a));
  const ViewZone b{Vec3(2, 2, 2), Vec3(3, 3, 3)};
  CHECK_FALSE(a.intersects(b));
  const ViewZone touching{Vec3(1, 0, 0), Vec3(2, 1, 1)};
  CHECK(a.intersects(touching));
  const ViewZone one_axis_off{Vec3(0, 0, 2), Vec3(1, 1, 3)};
  CHECK_FALSE(a.intersects(one_axis_off));
}

TEST_CASE("sts submap: temporal priority and the size bound") {
  ReidConfig cfg;
  cfg.t_map = 1000;
  cfg.min_age = 20;
  MapBuilder b;
  // 10 keyframes, 300 landmarks each (3000 total), all zones overlapping
  for (int k = 0; k < 10; ++k) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 300; ++i) pts.push_back(Vec3(0, 0, 5) + test::random_vec3(1.5));
    b.add_keyframe(k * 10, Pose(Quat::Identity(), Vec3(0.01 * k, 0, 0)), pts);
  }
  const int current_frame = 200;
  const auto submap = build_sts_submap(current_frame, 90, b.view, {}, cfg);
  CHECK(submap.entries.size() == 1000);
  // oldest keyframes fill the cap: cumulative count reaches 1000 within the
  // first four keyframes (ids 0,10,20,30)
  for (const auto& e : submap.entries) CHECK(e.source_kf <= 30);
  int from_oldest = 0;
  for (const auto& e : submap.entries) from_oldest += e.source_kf == 0;
  CHECK(from_oldest == 300);

  // no duplicates
  std::set<int> ids;
  for (const auto& e : submap.entries) ids.insert(e.landmark_id);
  CHECK(ids.size() == submap.entries.size());
}

TEST_CASE("sts submap: temporal neighbors and tracked landmarks are excluded") {
  ReidConfig cfg;
  cfg.min_age = 20;
  MapBuilder b;
  for (int k = 0; k < 6; ++k) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(Vec3(0, 0, 5) + test::random_vec3(1.0));
    b.add_keyframe(k * 5, Pose(), pts);
  }
  // current frame 30: keyframes 15, 20, 25 are within min_age
  const auto submap = build_sts_submap(30, 25, b.view, {0, 1}, cfg);
  for (const auto& e : submap.entries) {
    CHECK(30 - e.source_kf >= 20);
    CHECK(e.landmark_id != 0);
    CHECK(e.landmark_id != 1);
  }
  CHECK(!submap.entries.empty());

  // an empty map (no old-enough keyframe) is a skip, not an error
  const auto none = build_sts_submap(12, 25, b.view, {}, cfg);
  CHECK(none.entries.empty());
}

TEST_CASE("sts submap: disjoint zones are not candidates") {
  ReidConfig cfg;
  cfg.min_age = 2;
  MapBuilder b;
  b.add_keyframe(0, Pose(), {Vec3(0, 0, 5), Vec3(0.5, 0, 5)});
  b.add_keyframe(5, Pose(), {Vec3(50, 0, 5), Vec3(50.5, 0, 5)});   // far away
  b.add_keyframe(10, Pose(), {Vec3(0.2, 0, 5), Vec3(0.4, 0, 5)});  // reference
  const auto submap = build_sts_submap(30, 10, b.view, {}, cfg);
  for (const auto& e : submap.entries) CHECK(e.source_kf != 5);
  CHECK(!submap.entries.empty());
}

TEST_CASE("sts submap: loop topology keeps early overlapping keyframes only") {
  // clockwise loop of keyframes looking outward; the reference keyframe at
  // the loop closure overlaps the early-loop zones but not the far side
  ReidConfig cfg;
  cfg.min_age = 4;
  MapBuilder b;
  const int n = 12;
  for (int k = 0; k < n; ++k) {
    const double a = 2 * M_PI * k / n;
    const Vec3 dir(std::cos(a), std::sin(a), 0);
    const Pose pose(Quat::Identity(), 2.0 * dir);
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(5.0 * dir + test::random_vec3(0.4));
    b.add_keyframe(k, pose, pts);
  }
  // current frame just past one revolution; reference = keyframe 11, whose
  // zone overlaps keyframes 0..1 and 9..10 but not the opposite side
  const auto submap = build_sts_submap(12, 11, b.view, {}, cfg);
  REQUIRE(!submap.entries.empty());
  std::set<int> sources;
  for (const auto& e : submap.entries) sources.insert(e.source_kf);
  CHECK(sources.contains(0));        // early-loop keyframe re-identified
  CHECK_FALSE(sources.contains(5));  // opposite side of the loop
  CHECK_FALSE(sources.contains(6));
  for (int src : sources) CHECK(12 - src >= cfg.min_age);
}

TEST_CASE("geometry filter: exact prediction passes, corrupted pose fails") {
  ReidConfig cfg;
  MapBuilder b;
  const Pose kf_pose(Quat::Identity(), Vec3(0, 0, 0));
  std::vector<Vec3> pts;
  for (int i = 0; i < 30; ++i) {
    pts.push_back(Vec3(test::uniform(-1.5, 1.5), test::uniform(-1.0, 1.0), test::uniform(4, 7)));
  }
  b.add_keyframe(0, kf_pose, pts);

  // current frame sees the same points from a nearby pose
  const Pose current(Quat::Identity(), Vec3(0.1, 0.05, 0.2));
  sim::FrameObservations obs;
  obs.frame_id = 40;
  for (const auto& p : pts) {
    const auto px = project(cam(), current.inverse().act(p));
    if (!px) continue;
    sim::ObservationEntry e;
    e.left_px = *px;
    obs.entries.push_back(e);
  }
  CHECK(geometry_filter_keyframe(b.view.keyframes.at(0), b.view, current, cam(), obs, cfg));

  const Pose corrupted(current.q, current.p + Vec3(1.0, 0, 0));
  CHECK_FALSE(geometry_filter_keyframe(b.view.keyframes.at(0), b.view, corrupted, cam(), obs, cfg));

  // no in-view projections -> false
  const Pose behind(current.q, current.p + Vec3(0, 0, 20.0));
  CHECK_FALSE(geometry_filter_keyframe(b.view.keyframes.at(0), b.view, behind, cam(), obs, cfg));
}

TEST_CASE("geometry filter: boundary fraction passes on >=") {
  ReidConfig cfg;
  cfg.f_geo = 0.5;
  cfg.r_geo = 3.0;
  MapBuilder b;
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(Vec3(-1.5 + 0.33 * i, 0, 5));
  b.add_keyframe(0, Pose(), pts);

  sim::FrameObservations obs;
  obs.frame_id = 10;
  // features exactly at the projections of 5 of 10 landmarks
  for (int i = 0; i < 5; ++i) {
    const auto px = project(cam(), pts[i]);
    sim::ObservationEntry e;
    e.left_px = *px;
    obs.entries.push_back(e);
  }
  CHECK(geometry_filter_keyframe(b.view.keyframes.at(0), b.view, Pose(), cam(), obs, cfg));
}

namespace {

// A matching scene: landmarks in front of an identity-pose keyframe, current
// frame nearby; observations carry simulator descriptors.
struct MatchScene {
  MapBuilder builder;
  STSSubmap submap;
  sim::FrameObservations obs;
  Pose current{Quat::Identity(), Vec3(0.05, 0, 0.1)};
  std::uint64_t world_seed = 9, run_seed = 4;

  WarpFn warp() {
    return [this](const sim::ObservationEntry& e, double eff) {
      return sim::observation_descriptor(e.sim_landmark_id, obs.frame_id, eff, world_seed,
                                         run_seed);
    };
  }

  void build(int n_landmarks, double view_angle) {
    std::vector<Vec3> pts;
    for (int i = 0; i < n_landmarks; ++i) {
      pts.push_back(Vec3(test::uniform(-2, 2), test::uniform(-1.5, 1.5), test::uniform(4, 7)));
    }
    builder.add_keyframe(0, Pose(), pts, world_seed);
    ReidConfig cfg;
    cfg.min_age = 2;
    submap = build_sts_submap(40, 0, builder.view, {}, cfg);
    obs.frame_id = 40;
    for (int i = 0; i < n_landmarks; ++i) {
      const auto px = project(cam(), current.inverse().act(pts[i]));
      if (!px || !cam().in_image(*px)) continue;
      sim::ObservationEntry e;
      e.track_id = 1000 + i;
      e.sim_landmark_id = i;  // sim ids == map ids in this scene
      e.left_px = *px;
      e.track_age = 1;
      e.view_angle = view_angle;
      e.descriptor =
          sim::observation_descriptor(i, obs.frame_id, view_angle, world_seed, run_seed);
      obs.entries.push_back(e);
    }
  }
};

}  // namespace

TEST_CASE("matching: reobserved landmarks match far below the threshold") {
  MatchScene scene;
  scene.build(40, 45.0 * M_PI / 180.0);
  ReidConfig cfg;
  const auto result = match_features(scene.submap, scene.builder.view, scene.current, cam(),
                                     scene.obs, cfg, true, scene.warp());
  CHECK(result.matches.size() >= 20);
  int correct = 0;
  for (const auto& m : result.matches) {
    CHECK(m.distance < cfg.t_dist);
    CHECK(m.distance < 30);  // warped distance stays well below the gate
    if (scene.obs.entries[m.obs_index].sim_landmark_id == m.landmark_id) ++correct;
  }
  CHECK(correct == static_cast<int>(result.matches.size()));
  CHECK(static_cast<int>(result.matches.size()) <= cfg.n_top);
}

TEST_CASE("matching: wrong landmarks sit near 128 bits and are rejected") {
  MatchScene scene;
  scene.build(30, 0.2);
  // destroy identity: give observations descriptors of unrelated landmarks
  for (auto& e : scene.obs.entries) {
    e.sim_landmark_id += 5000;
    e.descriptor = sim::observation_descriptor(e.sim_landmark_id, scene.obs.frame_id, e.view_angle,
                                               scene.world_seed, scene.run_seed);
  }
  ReidConfig cfg;
  const auto result = match_features(scene.submap, scene.builder.view, scene.current, cam(),
                                     scene.obs, cfg, true, scene.warp());
  CHECK(result.matches.empty());

  // raw-distance mode rejects a 60-bit best match: view angle beyond the
  // usable range pushes the raw distance over the threshold
  MatchScene far_scene;
  far_scene.build(30, 75.0 * M_PI / 180.0);
  const auto raw = match_features(far_scene.submap, far_scene.builder.view, far_scene.current,
                                  cam(), far_scene.obs, cfg, false, far_scene.warp());
  for (const auto& m : raw.matches) CHECK(m.distance < cfg.t_dist);
  CHECK(raw.matches.size() < 3);  // nearly all rejected by the absolute threshold
}

TEST_CASE("matching: greedy uniqueness keeps the closer of two claims") {
  // two map landmarks projecting onto the same feature; distances differ
  MapBuilder b;
  const Vec3 p(0, 0, 5);
  b.add_keyframe(0, Pose(), {p, p + Vec3(0.001, 0, 0)}, 9);
  ReidConfig cfg;
  cfg.min_age = 2;
  cfg.ratio_test = 0;  // disabled so both candidates survive to greedy selection
  auto submap = build_sts_submap(40, 0, b.view, {}, cfg);
  REQUIRE(submap.entries.size() == 2);

  sim::FrameObservations obs;
  obs.frame_id = 40;
  sim::ObservationEntry e;
  e.track_id = 7;
  e.sim_landmark_id = 0;
  e.left_px = *project(cam(), p);
  e.track_age = 1;
  e.view_angle = 0.1;
  e.descriptor = sim::observation_descriptor(0, 40, 0.1, 9, 4);
  obs.entries.push_back(e);

  const WarpFn warp = [&](const sim::ObservationEntry& entry, double eff) {
    return sim::observation_descriptor(entry.sim_landmark_id, 40, eff, 9, 4);
  };
  const auto result = match_features(submap, b.view, Pose(), cam(), obs, cfg, true, warp);
  REQUIRE(result.matches.size() == 1);
  CHECK(result.matches[0].landmark_id == 0);  // the true landmark wins on distance
}

TEST_CASE("verification: 3-4-5 example, zero residuals, and a wrong match") {
  ReidConfig cfg;
  StereoRig rig = sim::default_rig();

  LmRecord rec;
  rec.bearing = Vec3(0, 0, 1);
  rec.inv_depth = 0.2;  // depth 5
  const Pose anchor;    // identity

  // measurement whose residual is exactly (3,4): offset the pixel
  Measurement m;
  m.frame_id = 3;
  m.left = *project(rig.left, Vec3(0, 0, 5)) - Vec2(3, 4);
  rec.meas = {m};
  const auto poses = [&](int) -> std::optional<Pose> { return Pose(); };
  auto verdict = verify_reid(rec, anchor, rig, poses, cfg);
  CHECK(verdict.mean_error_px == doctest::Approx(5.0));
  CHECK(verdict.keep);  // 5 <= 10

  // all residuals zero
  rec.meas[0].left = *project(rig.left, Vec3(0, 0, 5));
  verdict = verify_reid(rec, anchor, rig, poses, cfg);
  CHECK(verdict.mean_error_px == doctest::Approx(0.0));
  CHECK(verdict.keep);

  // wrong association: measurement of a different physical point
  rec.meas[0].left = *project(rig.left, Vec3(1.2, 0.4, 5));
  verdict = verify_reid(rec, anchor, rig, poses, cfg);
  CHECK(verdict.mean_error_px > 10.0);
  CHECK_FALSE(verdict.keep);

  rec.meas.clear();
  CHECK_THROWS_AS(verify_reid(rec, anchor, rig, poses, cfg), std::logic_error);
}
