#include "revio/estimator/lm_solver.hpp"

#include <cmath>
#include <stdexcept>

namespace revio {

void NormalEquations::add_dense(const std::vector<std::pair<int, Eigen::MatrixXd>>& jacs,
                                const Eigen::VectorXd& r) {
  for (size_t a = 0; a < jacs.size(); ++a) {
    const auto& [off_a, jac_a] = jacs[a];
    b_p.segment(off_a, jac_a.cols()) -= jac_a.transpose() * r;
    for (size_t b = 0; b < jacs.size(); ++b) {
      const auto& [off_b, jac_b] = jacs[b];
      h_pp.block(off_a, off_b, jac_a.cols(), jac_b.cols()) += jac_a.transpose() * jac_b;
    }
  }
}

void NormalEquations::add_visual(int off_i, const Eigen::Matrix<double, 2, 6>& jac_i, int off_s,
                                 const Eigen::Matrix<double, 2, 6>& jac_s, int lm_index,
                                 const Vec2& jac_rho, const Vec2& r) {
  if (off_i >= 0) {
    h_pp.block<6, 6>(off_i, off_i) += jac_i.transpose() * jac_i;
    b_p.segment<6>(off_i) -= jac_i.transpose() * r;
  }
  if (off_s >= 0) {
    h_pp.block<6, 6>(off_s, off_s) += jac_s.transpose() * jac_s;
    b_p.segment<6>(off_s) -= jac_s.transpose() * r;
    if (off_i >= 0) {
      const Mat6 cross = jac_i.transpose() * jac_s;
      h_pp.block<6, 6>(off_i, off_s) += cross;
      h_pp.block<6, 6>(off_s, off_i) += cross.transpose();
    }
  }
  if (lm_index >= 0) {
    auto& blk = lm[lm_index];
    blk.h += jac_rho.squaredNorm();
    blk.b -= jac_rho.dot(r);
    if (off_i >= 0) {
      blk.cross.try_emplace(off_i, Vec6::Zero()).first->second += jac_i.transpose() * jac_rho;
    }
    if (off_s >= 0) {
      blk.cross.try_emplace(off_s, Vec6::Zero()).first->second += jac_s.transpose() * jac_rho;
    }
  }
}

namespace {

struct Step {
  Eigen::VectorXd d_pose;
  Eigen::VectorXd d_lm;
  bool finite = false;
  double norm = 0;
};

Step solve_damped(const NormalEquations& eq, double lambda) {
  const int n = static_cast<int>(eq.h_pp.rows());
  Eigen::MatrixXd h = eq.h_pp;
  Eigen::VectorXd b = eq.b_p;

  // Marquardt scaling on the diagonal, with an absolute floor so zero
  // diagonals still get damped.
  for (int i = 0; i < n; ++i) h(i, i) += lambda * std::max(h(i, i), 1e-8);

  // Schur complement over scalar landmarks.
  std::vector<double> h_lm_damped(eq.lm.size());
  for (size_t j = 0; j < eq.lm.size(); ++j) {
    const auto& blk = eq.lm[j];
    const double hd = blk.h + lambda * std::max(blk.h, 1e-8);
    h_lm_damped[j] = hd;
    if (blk.h <= 0) continue;
    const double inv = 1.0 / hd;
    for (const auto& [off_a, cross_a] : blk.cross) {
      b.segment<6>(off_a) -= cross_a * (blk.b * inv);
      for (const auto& [off_b, cross_b] : blk.cross) {
        h.block<6, 6>(off_a, off_b) -= cross_a * inv * cross_b.transpose();
      }
    }
  }

  Step step;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success) return step;
  step.d_pose = ldlt.solve(b);
  step.d_lm.resize(eq.lm.size());
  for (size_t j = 0; j < eq.lm.size(); ++j) {
    const auto& blk = eq.lm[j];
    if (blk.h <= 0) {
      step.d_lm[j] = 0;
      continue;
    }
    double num = blk.b;
    for (const auto& [off, cross] : blk.cross) num -= cross.dot(step.d_pose.segment<6>(off));
    step.d_lm[j] = num / h_lm_damped[j];
  }
  step.finite = step.d_pose.allFinite() && step.d_lm.allFinite();
  step.norm = std::sqrt(step.d_pose.squaredNorm() + step.d_lm.squaredNorm());
  return step;
}

}  // namespace

LmStats lm_solve(LeastSquaresProblem& problem, const LmOptions& opts,
                 NormalEquations* final_normals) {
  NormalEquations eq;
  eq.resize(problem.pose_dim(), problem.landmark_count());

  auto cost_opt = problem.evaluate(&eq);
  if (!cost_opt) throw std::runtime_error("lm_solve: invalid initial state");
  for (int i = 0; i < eq.h_pp.rows(); ++i) {
    if (eq.h_pp(i, i) <= 0) {
      throw std::runtime_error("lm_solve: rank-deficient normal equations (unconstrained state)");
    }
  }

  LmStats stats;
  stats.initial_cost = *cost_opt;
  stats.accepted_costs.push_back(*cost_opt);
  double cost = *cost_opt;
  double lambda = opts.init_lambda;

  const auto gradient_small = [&] {
    double g = eq.b_p.size() ? eq.b_p.cwiseAbs().maxCoeff() : 0.0;
    for (const auto& blk : eq.lm) g = std::max(g, std::abs(blk.b));
    return g < opts.gradient_tol;
  };

  int iter = 0;
  int rejects = 0;
  bool need_assemble = false;
  while (iter < opts.max_iterations) {
    if (need_assemble) {
      eq.resize(problem.pose_dim(), problem.landmark_count());
      const auto c = problem.evaluate(&eq);
      if (!c) throw std::runtime_error("lm_solve: state became invalid after accepted step");
      need_assemble = false;
    }
    if (gradient_small()) {
      stats.converged = true;
      break;
    }

    const Step step = solve_damped(eq, lambda);
    if (!step.finite) {
      if (lambda >= opts.max_lambda) {
        throw std::runtime_error("lm_solve: rank-deficient normal equations");
      }
      lambda = std::min(lambda * opts.lambda_up, opts.max_lambda);
      if (++rejects > opts.max_consecutive_rejects) break;
      continue;
    }

    problem.save_state();
    problem.apply_step(step.d_pose, step.d_lm);
    const auto new_cost = problem.evaluate(nullptr);
    ++iter;

    if (!new_cost || !(*new_cost <= cost)) {
      problem.restore_state();
      lambda = std::min(lambda * opts.lambda_up, opts.max_lambda);
      if (++rejects > opts.max_consecutive_rejects) break;
      continue;
    }

    rejects = 0;
    const double decrease = cost - *new_cost;
    cost = *new_cost;
    stats.accepted_costs.push_back(cost);
    lambda = std::max(lambda * opts.lambda_down, opts.min_lambda);
    need_assemble = true;

    // relative decrease, with an absolute floor once the cost is below 1
    if (decrease <= opts.rel_decrease_tol * std::max(cost, 1.0) ||
        step.norm < opts.step_norm_tol) {
      stats.converged = true;
      break;
    }
  }
  if (rejects > opts.max_consecutive_rejects) stats.converged = true;  // stalled at a minimum

  stats.final_cost = cost;
  stats.iterations = iter;
  if (final_normals) {
    final_normals->resize(problem.pose_dim(), problem.landmark_count());
    problem.evaluate(final_normals);
  }
  return stats;
}

}  // namespace revio
