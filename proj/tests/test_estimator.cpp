#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "revio/estimator/sliding_window.hpp"
#include "revio/sim/simulator.hpp"
#include "test_feeder.hpp"
#include "test_util.hpp"

using namespace revio;
using test::Feeder;
using test::make_scenario;


TEST_CASE("bootstrap anchors stereo landmarks with triangulated depth") {
  auto sc = make_scenario(5, 0.0);
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  feeder.feed(0, view);

  CHECK(est.frames().size() == 1);
  CHECK(store.records().size() == sc.obs[0].entries.size());
  for (const auto& [id, rec] : store.records()) {
    CHECK(rec.anchor_frame == 0);
    const Vec3 xw = sc.world.landmarks[rec.sim_id].second;
    const double true_depth = sc.gt[0].pose_wb.inverse().act(xw).z();
    CHECK(std::abs(1.0 / rec.inv_depth - true_depth) < 1e-6);
  }
}

TEST_CASE("predicted pose initialization matches ground truth at zero noise") {
  auto sc = make_scenario(6, 0.0);
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  for (int f = 0; f < 6; ++f) {
    feeder.feed(f, view);
    CHECK((est.frames().back().state.pose_wb.p - sc.gt[f].pose_wb.p).norm() < 1e-4);
  }
}

TEST_CASE("add_frame rejects IMU gaps") {
  auto sc = make_scenario(3, 0.0);
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  feeder.feed(0, view);
  FrameInput bad = feeder.make_input(1);
  bad.imu.clear();
  CHECK_THROWS_AS(est.add_frame(bad, view), std::runtime_error);
}

TEST_CASE("zero-noise window solve reaches machine-precision cost") {
  auto sc = make_scenario(5, 0.0, 17, 8000.0);
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  for (int f = 0; f < 5; ++f) feeder.feed(f, view);

  const auto report = est.solve_local_ba(view);
  CHECK(report.stats.final_cost < 1e-10);
  for (size_t i = 1; i < report.stats.accepted_costs.size(); ++i) {
    CHECK(report.stats.accepted_costs[i] <= report.stats.accepted_costs[i - 1]);
  }
  for (int f = 0; f < 5; ++f) {
    CHECK((est.frames()[f].state.pose_wb.p - sc.gt[f].pose_wb.p).norm() < 1e-6);
  }
}

TEST_CASE("window at the optimum stays put") {
  // exact-consistency scenario: the optimum is a true stationary point
  auto sc = make_scenario(5, 0.0, 17, 40000.0);
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  for (int f = 0; f < 5; ++f) feeder.feed(f, view);

  est.solve_local_ba(view);
  std::vector<Pose> poses;
  for (const auto& f : est.frames()) poses.push_back(f.state.pose_wb);

  const auto again = est.solve_local_ba(view);
  CHECK(again.stats.iterations <= 1);
  for (size_t i = 0; i < poses.size(); ++i) {
    CHECK((est.frames()[i].state.pose_wb.p - poses[i].p).norm() < 1e-12);
  }
}

TEST_CASE("analytic gradient matches finite differences on a random window") {
  auto sc = make_scenario(4, 1.0);
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  for (int f = 0; f < 4; ++f) feeder.feed(f, view);

  // move off the optimum so the gradient is non-trivial
  for (auto& fr : est.frames()) {
    Vec15 d = Vec15::Zero();
    d.head<3>() = test::random_vec3(0.002);
    d.segment<3>(3) = test::random_vec3(0.01);
    d.segment<3>(6) = test::random_vec3(0.01);
    fr.state = fr.state.retract(d);
  }

  const auto eval = est.evaluate_window(view);
  REQUIRE(std::isfinite(eval.cost));

  const int n = static_cast<int>(est.frames().size());
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 15; ++c) {
      const double step = 1e-6;
      Vec15 d = Vec15::Zero();
      const NavState saved = est.frames()[i].state;
      d[c] = step;
      est.frames()[i].state = saved.retract(d);
      const double hi = est.evaluate_window(view).cost;
      d[c] = -step;
      est.frames()[i].state = saved.retract(d);
      const double lo = est.evaluate_window(view).cost;
      est.frames()[i].state = saved;
      const double fd = (hi - lo) / (2 * step);
      const double an = eval.gradient_pose[15 * i + c];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
      if (std::abs(fd - an) / denom >= 1e-4) {
        MESSAGE("frame " << i << " comp " << c << " fd " << fd << " an " << an);
      }
      CHECK(std::abs(fd - an) / denom < 1e-4);
    }
  }
  for (size_t j = 0; j < eval.lm_ids.size(); ++j) {
    const double step = 1e-6;
    auto& rec = store.at(eval.lm_ids[j]);
    const double saved = rec.inv_depth;
    rec.inv_depth = saved + step;
    const double hi = est.evaluate_window(view).cost;
    rec.inv_depth = saved - step;
    const double lo = est.evaluate_window(view).cost;
    rec.inv_depth = saved;
    const double fd = (hi - lo) / (2 * step);
    const double an = eval.gradient_lm[j];
    const double denom = std::max({std::abs(fd), std::abs(an), 1e-3});
    CHECK(std::abs(fd - an) / denom < 1e-4);
  }
}

TEST_CASE("huber bounds the influence of an injected outlier") {
  auto sc = make_scenario(5, 0.0);
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  for (int f = 0; f < 5; ++f) feeder.feed(f, view);
  est.solve_local_ba(view);

  // clean reprojections of frame-3 measurements
  const auto reproject_all = [&](const SlidingWindowEstimator& e) {
    std::vector<Vec2> out;
    const auto& fr = e.frames()[3];
    for (size_t k = 0; k < fr.obs.size(); ++k) {
      const auto& rec = store.at(fr.obs_lm_ids[k]);
      const Pose anchor = [&] {
        for (const auto& wf : e.frames()) {
          if (wf.frame_id == rec.anchor_frame) return wf.state.pose_wb;
        }
        return Pose();
      }();
      const auto ev = project_body_residual(sc.cfg.rig.left, Pose::identity(), fr.state.pose_wb,
                                            anchor, rec.bearing, rec.inv_depth, fr.obs[k].left);
      if (ev) out.push_back(ev->residual);
    }
    return out;
  };
  const auto clean = reproject_all(est);

  // corrupt one measurement by 50 px and re-solve
  auto& fr = est.frames()[3];
  REQUIRE(!fr.obs.empty());
  fr.obs[0].left += Vec2(50.0, 0.0);
  auto& rec = store.at(fr.obs_lm_ids[0]);
  for (auto& m : rec.meas) {
    if (m.frame_id == fr.frame_id) m.left += Vec2(50.0, 0.0);
  }
  est.solve_local_ba(view);
  const auto dirty = reproject_all(est);

  REQUIRE(clean.size() == dirty.size());
  for (size_t k = 1; k < clean.size(); ++k) {  // skip the corrupted one
    CHECK((clean[k] - dirty[k]).norm() < 0.5);
  }
}

TEST_CASE("capacity rule: marginalization keeps the window at size") {
  auto sc = make_scenario(16, 0.0);
  sc.cfg.window_size = 6;
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  for (int f = 0; f < 16; ++f) {
    feeder.feed(f, view);
    if (f >= 1) est.solve_local_ba(view);
    CHECK(est.frames().size() <= 6);
  }
  CHECK(est.frames().size() == 6);
  CHECK(est.oldest_frame_id() == 10);
}

TEST_CASE("marginalizing a consistent frame leaves remaining states in place") {
  auto sc = make_scenario(7, 0.0, 17, 8000.0);
  sc.cfg.window_size = 6;
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  for (int f = 0; f < 6; ++f) feeder.feed(f, view);
  est.solve_local_ba(view);

  std::vector<NavState> before;
  for (size_t i = 1; i < est.frames().size(); ++i) before.push_back(est.frames()[i].state);

  est.marginalize_oldest(view);
  est.solve_local_ba(view);

  for (size_t i = 0; i < before.size(); ++i) {
    CHECK((est.frames()[i].state.pose_wb.p - before[i].pose_wb.p).norm() < 1e-9);
    CHECK((est.frames()[i].state.velocity - before[i].velocity).norm() < 1e-9);
  }
}

TEST_CASE("100-frame zero-noise run with marginalization stays below 1e-3 m") {
  auto sc = make_scenario(100, 0.0);
  LandmarkStore store;
  SlidingWindowEstimator est(sc.cfg, store);
  Feeder feeder{est, sc};
  MapView view;
  double worst = 0;
  for (int f = 0; f < 100; ++f) {
    feeder.feed(f, view);
    if (f >= 1) est.solve_local_ba(view);
    worst = std::max(worst, (est.frames().back().state.pose_wb.p - sc.gt[f].pose_wb.p).norm());
  }
  CHECK(worst < 1e-3);
}
