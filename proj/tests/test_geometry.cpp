#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "revio/visual_residual.hpp"
#include "test_util.hpp"

using namespace revio;

namespace {

// Forward-Euler integration of the twist ODE, independent of se3_exp.
Pose integrate_twist_ode(const Vec6& twist, double dt) {
  Mat3 rot = Mat3::Identity();
  Vec3 p = Vec3::Zero();
  const Vec3 omega = twist.head<3>();
  const Vec3 v = twist.tail<3>();
  const int n = static_cast<int>(std::llround(1.0 / dt));
  for (int i = 0; i < n; ++i) {
    p += rot * v * dt;
    rot = rot + rot * skew(omega) * dt;
    // re-orthonormalize
    Eigen::JacobiSVD<Mat3> svd(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = svd.matrixU() * svd.matrixV().transpose();
  }
  return Pose(rot, p);
}

CameraIntrinsics test_cam() { return CameraIntrinsics{400, 400, 320, 240, 640, 480}; }

}  // namespace

TEST_CASE("se3_exp identity and rotation") {
  const Pose id = se3_exp(Vec6::Zero());
  CHECK(id.q.isApprox(Quat::Identity()));
  CHECK(id.p.norm() == doctest::Approx(0.0));

  Vec6 tw;
  tw << 0, 0, M_PI, 0, 0, 0;
  const Pose rot_pi = se3_exp(tw);
  const Mat3 expected = Eigen::AngleAxisd(M_PI, Vec3::UnitZ()).toRotationMatrix();
  CHECK((rot_pi.rot() - expected).norm() < 1e-12);
  CHECK(rot_pi.p.norm() < 1e-12);
}

TEST_CASE("se3_exp matches ODE integration") {
  for (int trial = 0; trial < 3; ++trial) {
    Vec6 tw;
    tw << test::random_vec3(2.0), test::random_vec3(1.5);
    const Pose a = se3_exp(tw);
    const Pose b = integrate_twist_ode(tw, 1e-5);
    CHECK((a.rot() - b.rot()).norm() < 1e-4);
    CHECK((a.p - b.p).norm() < 1e-4);
  }
  // the spec's canonical case at fine resolution
  Vec6 tw;
  tw << 0, 0, M_PI, 1, 0, 0;
  const Pose a = se3_exp(tw);
  const Pose b = integrate_twist_ode(tw, 1e-6);
  CHECK((a.p - b.p).norm() < 1e-5);
}

TEST_CASE("exp/log round trip on random poses") {
  for (int i = 0; i < 100; ++i) {
    const Pose p = test::random_pose(2.9, 3.0);
    const Pose q = se3_exp(se3_log(p));
    CHECK((q.rot() - p.rot()).norm() < 1e-9);
    CHECK((q.p - p.p).norm() < 1e-9);
  }
}

TEST_CASE("group axioms") {
  for (int i = 0; i < 100; ++i) {
    const Pose a = test::random_pose(), b = test::random_pose(), c = test::random_pose();
    const Pose ab_c = (a * b) * c;
    const Pose a_bc = a * (b * c);
    CHECK((ab_c.rot() - a_bc.rot()).norm() < 1e-9);
    CHECK((ab_c.p - a_bc.p).norm() < 1e-9);

    const Pose ident = a * a.inverse();
    CHECK((ident.rot() - Mat3::Identity()).norm() < 1e-9);
    CHECK(ident.p.norm() < 1e-9);

    const Pose aa = a.inverse().inverse();
    CHECK((aa.rot() - a.rot()).norm() < 1e-12);
  }
}

TEST_CASE("pinhole projection") {
  const auto cam = test_cam();
  auto px = project(cam, Vec3(0, 0, 1));
  REQUIRE(px.has_value());
  CHECK(px->x() == doctest::Approx(320));
  CHECK(px->y() == doctest::Approx(240));

  px = project(cam, Vec3(1, 0, 2));
  REQUIRE(px.has_value());
  CHECK(px->x() == doctest::Approx(520));
  CHECK(px->y() == doctest::Approx(240));

  CHECK_FALSE(project(cam, Vec3(0, 0, 0)).has_value());
  CHECK_FALSE(project(cam, Vec3(0.5, 0.1, -1)).has_value());
}

TEST_CASE("projection round trip") {
  const auto cam = test_cam();
  for (int i = 0; i < 100; ++i) {
    const double depth = test::uniform(0.3, 20.0);
    const Vec3 p(test::uniform(-0.6, 0.6) * depth, test::uniform(-0.45, 0.45) * depth, depth);
    const auto px = project(cam, p);
    REQUIRE(px.has_value());
    const Vec3 back = unproject(cam, *px) * depth;
    CHECK((back - p).norm() < 1e-9);
  }
}

TEST_CASE("landmark world point") {
  Landmark lm;
  lm.anchor_bearing = Vec3(0, 0, 1);
  lm.inv_depth = 0.5;
  CHECK((landmark_world_point(lm, Pose::identity()) - Vec3(0, 0, 2)).norm() < 1e-12);

  // anchor camera translated: transforming the world point back into the
  // anchor frame must give the ray at depth 1/rho
  lm.inv_depth = 1.0;
  const Pose anchor(Quat::Identity(), Vec3(1, 0, 0));
  const Vec3 xw = landmark_world_point(lm, anchor);
  CHECK((anchor.act(xw) - Vec3(0, 0, 1)).norm() < 1e-12);

  lm.inv_depth = 0.0;
  CHECK_THROWS_AS(landmark_world_point(lm, anchor), std::invalid_argument);
}

TEST_CASE("landmark anchor round trip") {
  for (int i = 0; i < 100; ++i) {
    Landmark lm;
    lm.anchor_bearing = Vec3(test::uniform(-0.5, 0.5), test::uniform(-0.4, 0.4), 1.0);
    lm.inv_depth = test::uniform(0.1, 3.0);
    const Pose anchor = test::random_pose();
    const Vec3 xw = landmark_world_point(lm, anchor);
    const Vec3 back = anchor.act(xw);  // into anchor camera frame
    const Vec3 ray = back / back.z();
    CHECK((ray - lm.anchor_bearing).norm() < 1e-10);
  }
}

namespace {

struct VisCfg {
  Pose pose_i, pose_anchor;
  Landmark lm;
  Vec2 z;
};

VisCfg random_visual_config() {
  const auto cam = test_cam();
  while (true) {
    VisCfg cfg;
    cfg.lm.anchor_bearing = Vec3(test::uniform(-0.4, 0.4), test::uniform(-0.3, 0.3), 1.0);
    cfg.lm.inv_depth = test::uniform(0.2, 1.5);
    cfg.pose_anchor = test::random_pose(0.4, 0.5);
    // keep the observing camera near the anchor so the point stays in front
    cfg.pose_i = Pose(cfg.pose_anchor.q * so3_exp_quat(test::random_vec3(0.1)),
                      cfg.pose_anchor.p + test::random_vec3(0.2));
    cfg.z = Vec2(test::uniform(0, 640), test::uniform(0, 480));
    const auto eval = visual_residual(cam, cfg.pose_i, cfg.pose_anchor, cfg.lm, cfg.z);
    if (!eval) continue;
    const Vec3 xw = landmark_world_point(cfg.lm, cfg.pose_anchor);
    if (cfg.pose_i.act(xw).z() < 0.05) continue;
    return cfg;
  }
}

}  // namespace

TEST_CASE("visual residual: self observation is zero") {
  const auto cam = test_cam();
  Landmark lm;
  lm.anchor_bearing = Vec3(0.1, -0.05, 1.0);
  lm.inv_depth = 0.7;
  const auto z = project(cam, lm.anchor_bearing);
  REQUIRE(z.has_value());
  const auto eval = visual_residual(cam, Pose::identity(), Pose::identity(), lm, *z);
  REQUIRE(eval.has_value());
  CHECK(eval->residual.norm() < 1e-12);
}

TEST_CASE("visual residual: lateral translation shifts by fx*dx/z") {
  const auto cam = test_cam();
  Landmark lm;
  lm.anchor_bearing = Vec3(0, 0, 1);
  lm.inv_depth = 1.0;  // depth 1
  const auto z = project(cam, Vec3(0, 0, 1));
  REQUIRE(z.has_value());
  // camera moved +0.1 in x: point appears at x=-0.1 in the new frame
  const Pose cam_from_world(Quat::Identity(), Vec3(-0.1, 0, 0));
  const auto eval = visual_residual(cam, cam_from_world, Pose::identity(), lm, *z);
  REQUIRE(eval.has_value());
  const auto expected = project(cam, Vec3(-0.1, 0, 1));
  CHECK(eval->residual.x() == doctest::Approx((*expected - *z).x()));
  CHECK(eval->residual.x() == doctest::Approx(-40.0));
  CHECK(std::abs(eval->residual.y()) < 1e-12);
}

TEST_CASE("visual residual jacobians vs finite differences") {
  const auto cam = test_cam();
  for (int trial = 0; trial < 100; ++trial) {
    const VisCfg cfg = random_visual_config();
    const auto eval = visual_residual(cam, cfg.pose_i, cfg.pose_anchor, cfg.lm, cfg.z);
    REQUIRE(eval.has_value());

    const auto fd_i = test::numeric_jacobian(2, 6, [&](const Eigen::VectorXd& d) {
      const Pose p = cfg.pose_i.retract(d);
      return Eigen::VectorXd(visual_residual(cam, p, cfg.pose_anchor, cfg.lm, cfg.z)->residual);
    });
    CHECK(test::max_rel_error(eval->jac_pose_i, fd_i) < 1e-5);

    const auto fd_s = test::numeric_jacobian(2, 6, [&](const Eigen::VectorXd& d) {
      const Pose p = cfg.pose_anchor.retract(d);
      return Eigen::VectorXd(visual_residual(cam, cfg.pose_i, p, cfg.lm, cfg.z)->residual);
    });
    CHECK(test::max_rel_error(eval->jac_pose_anchor, fd_s) < 1e-5);

    const auto fd_rho = test::numeric_jacobian(2, 1, [&](const Eigen::VectorXd& d) {
      Landmark lm = cfg.lm;
      lm.inv_depth += d[0];
      return Eigen::VectorXd(visual_residual(cam, cfg.pose_i, cfg.pose_anchor, lm, cfg.z)->residual);
    });
    CHECK(test::max_rel_error(eval->jac_inv_depth, fd_rho) < 1e-5);
  }
}
