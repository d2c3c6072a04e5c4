#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "revio/eval/metrics.hpp"
#include "test_util.hpp"

using namespace revio;
using namespace revio::eval;

namespace {

// Independent alignment oracle: Horn's closed-form absolute orientation via
// the quaternion eigenvalue method, plus explicit centroid translation.
Alignment horn_alignment(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  const int n = static_cast<int>(from.size());
  Vec3 mean_from = Vec3::Zero(), mean_to = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    mean_from += from[i];
    mean_to += to[i];
  }
  mean_from /= n;
  mean_to /= n;

  Mat3 m = Mat3::Zero();
  for (int i = 0; i < n; ++i) m += (from[i] - mean_from) * (to[i] - mean_to).transpose();
  Eigen::Matrix4d big;
  const double sxx = m(0, 0), sxy = m(0, 1), sxz = m(0, 2);
  const double syx = m(1, 0), syy = m(1, 1), syz = m(1, 2);
  const double szx = m(2, 0), szy = m(2, 1), szz = m(2, 2);
  big << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
         syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
         szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
         sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(big);
  Eigen::Vector4d q = es.eigenvectors().col(3);  // largest eigenvalue
  const Quat quat(q[0], q[1], q[2], q[3]);
  Alignment out;
  out.rotation = quat.normalized().toRotationMatrix();
  out.translation = mean_to - out.rotation * mean_from;
  return out;
}

double rmse_with(const Alignment& a, const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  double sum = 0;
  for (size_t i = 0; i < from.size(); ++i) {
    sum += (a.rotation * from[i] + a.translation - to[i]).squaredNorm();
  }
  return std::sqrt(sum / from.size());
}

TrajectoryRecord ring(int n, double radius, double z = 0) {
  TrajectoryRecord rec;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * M_PI * i / n;
    rec.push(i * 0.05, Pose(Quat::Identity(), Vec3(radius * std::cos(a), radius * std::sin(a), z)));
  }
  return rec;
}

TrajectoryRecord transformed(const TrajectoryRecord& in, const Pose& t) {
  TrajectoryRecord out;
  for (size_t i = 0; i < in.size(); ++i) out.push(in.timestamps[i], t * in.poses[i]);
  return out;
}

}  // namespace

TEST_CASE("ate: identical trajectories give zero") {
  const auto traj = ring(50, 3.0);
  CHECK(ate_rmse(traj, traj) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ate: rigid transforms are removed by alignment") {
  const auto truth = ring(60, 2.0);
  const Pose t = test::random_pose();
  const auto est = transformed(truth, t);
  CHECK(ate_rmse(est, truth) < 1e-9);

  // common transform of both trajectories leaves the error unchanged
  const auto noisy = [&] {
    TrajectoryRecord rec;
    for (size_t i = 0; i < truth.size(); ++i) {
      rec.push(truth.timestamps[i],
               Pose(truth.poses[i].q, truth.poses[i].p + test::random_vec3(0.02)));
    }
    return rec;
  }();
  const double base = ate_rmse(noisy, truth);
  const Pose common = test::random_pose();
  const double moved = ate_rmse(transformed(noisy, common), transformed(truth, common));
  CHECK(base == doctest::Approx(moved).epsilon(1e-9));
}

TEST_CASE("ate: half-ring z-offset matches the oracle") {
  const auto truth = ring(40, 3.0);
  TrajectoryRecord est = truth;
  for (size_t i = 0; i < est.size(); i += 2) est.poses[i].p.z() += 0.1;

  const double mine = ate_rmse(est, truth);

  // oracle: Horn alignment plus a local grid probe around it
  std::vector<Vec3> from, to;
  for (size_t i = 0; i < est.size(); ++i) {
    from.push_back(est.poses[i].p);
    to.push_back(truth.poses[i].p);
  }
  const Alignment horn = horn_alignment(from, to);
  const double oracle = rmse_with(horn, from, to);
  for (double dz = -0.02; dz <= 0.02; dz += 0.004) {
    Alignment probe = horn;
    probe.translation.z() += dz;
    CHECK(rmse_with(probe, from, to) >= oracle - 1e-12);
  }
  CHECK(std::abs(mine - oracle) < 1e-9);
  CHECK(mine < 0.1 / std::sqrt(2.0) + 1e-9);  // never worse than the raw offset spread
}

TEST_CASE("ate: alignment matches the Horn oracle on random pairs") {
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 30;
    TrajectoryRecord truth, est;
    const Pose offset = test::random_pose();
    for (int i = 0; i < n; ++i) {
      const Vec3 p = test::random_vec3(4.0);
      truth.push(i * 0.1, Pose(Quat::Identity(), p));
      est.push(i * 0.1, Pose(Quat::Identity(), offset.act(p) + test::random_vec3(0.05)));
    }
    const double mine = ate_rmse(est, truth);
    std::vector<Vec3> from, to;
    for (int i = 0; i < n; ++i) {
      from.push_back(est.poses[i].p);
      to.push_back(truth.poses[i].p);
    }
    const double oracle = rmse_with(horn_alignment(from, to), from, to);
    CHECK(std::abs(mine - oracle) < 1e-9);
  }
}

TEST_CASE("ate: rejects insufficient overlap") {
  TrajectoryRecord a, b;
  a.push(0.0, Pose());
  a.push(1.0, Pose());
  a.push(2.0, Pose());
  b.push(10.0, Pose());
  b.push(11.0, Pose());
  b.push(12.0, Pose());
  CHECK_THROWS_AS(ate_rmse(a, b), std::invalid_argument);
}

TEST_CASE("track stats: paper narrative spans") {
  // landmark anchored at frame 185, last measured at 776
  TrackStats s = track_stats({{185, 776, 38}});
  CHECK(s.ats == doctest::Approx(591));
  CHECK(s.atl == doctest::Approx(38));

  // single observation
  s = track_stats({{10, 10, 1}});
  CHECK(s.ats == doctest::Approx(0));
  CHECK(s.atl == doctest::Approx(1));

  // unbroken 21-frame track: TL = TS + 1
  s = track_stats({{100, 120, 21}});
  CHECK(s.ats == doctest::Approx(20));
  CHECK(s.atl == doctest::Approx(21));

  CHECK_THROWS_AS(track_stats({}), std::invalid_argument);
}

TEST_CASE("track stats: TL <= TS + 1 for per-frame measurements") {
  std::vector<TrackRow> rows;
  for (int i = 0; i < 200; ++i) {
    const int anchor = static_cast<int>(test::uniform(0, 500));
    const int span = static_cast<int>(test::uniform(0, 60));
    const int count = 1 + static_cast<int>(test::uniform(0, span + 0.999));
    rows.push_back({anchor, anchor + span, count});
  }
  const auto s = track_stats(rows);
  CHECK(s.atl <= s.ats + 1 + 1e-12);
}
