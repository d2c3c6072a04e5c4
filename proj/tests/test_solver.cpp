#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "revio/estimator/lm_solver.hpp"
#include "test_util.hpp"

using namespace revio;

namespace {

// Linear least squares with two 6-dim pose blocks and scalar landmarks;
// the exact optimum is known, so one LM run must reach it.
class LinearProblem : public LeastSquaresProblem {
 public:
  struct Term {
    int off_i, off_s, lm;
    Eigen::Matrix<double, 2, 6> jac_i, jac_s;
    Vec2 jac_rho;
    Vec2 offset;  // residual at x = 0
  };

  LinearProblem(int n_pose, int n_lm) : n_pose_(n_pose) {
    x_pose_ = Eigen::VectorXd::Zero(n_pose);
    x_lm_ = Eigen::VectorXd::Zero(n_lm);
  }

  void add_term(Term t) { terms_.push_back(std::move(t)); }

  int pose_dim() const override { return n_pose_; }
  int landmark_count() const override { return static_cast<int>(x_lm_.size()); }

  Vec2 residual(const Term& t) const {
    Vec2 r = t.offset;
    if (t.off_i >= 0) r += t.jac_i * x_pose_.segment<6>(t.off_i);
    if (t.off_s >= 0) r += t.jac_s * x_pose_.segment<6>(t.off_s);
    if (t.lm >= 0) r += t.jac_rho * x_lm_[t.lm];
    return r;
  }

  std::optional<double> evaluate(NormalEquations* normals) override {
    double cost = 0;
    for (const auto& t : terms_) {
      const Vec2 r = residual(t);
      cost += 0.5 * r.squaredNorm();
      if (normals) normals->add_visual(t.off_i, t.jac_i, t.off_s, t.jac_s, t.lm, t.jac_rho, r);
    }
    return cost;
  }

  void apply_step(const Eigen::VectorXd& dp, const Eigen::VectorXd& dl) override {
    x_pose_ += dp;
    x_lm_ += dl;
  }
  void save_state() override {
    saved_ = {x_pose_, x_lm_};
  }
  void restore_state() override {
    x_pose_ = saved_.first;
    x_lm_ = saved_.second;
  }

  Eigen::VectorXd x_pose_, x_lm_;

 private:
  int n_pose_;
  std::vector<Term> terms_;
  std::pair<Eigen::VectorXd, Eigen::VectorXd> saved_;
};

LinearProblem random_linear_problem(int n_lm, int terms_per_lm) {
  LinearProblem p(12, n_lm);
  for (int j = 0; j < n_lm; ++j) {
    for (int k = 0; k < terms_per_lm; ++k) {
      LinearProblem::Term t;
      t.off_i = (k % 2) * 6;
      t.off_s = ((k + 1) % 2) * 6;
      t.lm = j;
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 6; ++c) {
          t.jac_i(r, c) = test::uniform(-1, 1);
          t.jac_s(r, c) = test::uniform(-1, 1);
        }
        t.jac_rho[r] = test::uniform(-1, 1);
        t.offset[r] = test::uniform(-2, 2);
      }
      p.add_term(std::move(t));
    }
  }
  return p;
}

}  // namespace

TEST_CASE("lm solver reaches the exact optimum of a linear problem") {
  auto p = random_linear_problem(5, 6);

  // dense reference solution of the same normal equations
  NormalEquations eq;
  eq.resize(12, 5);
  p.evaluate(&eq);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(17, 17);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(17);
  h.topLeftCorner(12, 12) = eq.h_pp;
  b.head(12) = eq.b_p;
  for (int j = 0; j < 5; ++j) {
    h(12 + j, 12 + j) = eq.lm[j].h;
    b[12 + j] = eq.lm[j].b;
    for (const auto& [off, cross] : eq.lm[j].cross) {
      h.block<6, 1>(off, 12 + j) = cross;
      h.block<1, 6>(12 + j, off) = cross.transpose();
    }
  }
  const Eigen::VectorXd ref = h.ldlt().solve(b);

  const LmStats stats = lm_solve(p, LmOptions{});
  CHECK(stats.final_cost < stats.initial_cost);
  CHECK((p.x_pose_ - ref.head(12)).norm() < 1e-6);
  CHECK((p.x_lm_ - ref.tail(5)).norm() < 1e-6);

  // monotone accepted costs
  for (size_t i = 1; i < stats.accepted_costs.size(); ++i) {
    CHECK(stats.accepted_costs[i] <= stats.accepted_costs[i - 1]);
  }
}

TEST_CASE("lm solver terminates immediately at an optimum") {
  auto p = random_linear_problem(3, 5);
  lm_solve(p, LmOptions{});
  const Eigen::VectorXd at_opt_pose = p.x_pose_;
  const LmStats again = lm_solve(p, LmOptions{});
  CHECK(again.iterations <= 1);
  CHECK((p.x_pose_ - at_opt_pose).norm() < 1e-10);
}

TEST_CASE("lm solver signals rank deficiency") {
  // one pose block receives no constraints at all
  LinearProblem p(12, 1);
  LinearProblem::Term t;
  t.off_i = 0;
  t.off_s = -1;
  t.lm = 0;
  t.jac_i.setRandom();
  t.jac_rho = Vec2(0.3, -0.2);
  t.offset = Vec2(1.0, 0.5);
  p.add_term(std::move(t));
  CHECK_THROWS_AS(lm_solve(p, LmOptions{}), std::runtime_error);
}
