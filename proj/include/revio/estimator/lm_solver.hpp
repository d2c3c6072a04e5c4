#pragma once

#include <map>
#include <optional>
#include <vector>

#include "revio/math.hpp"

namespace revio {

// Normal equations with dense frame states and scalar (inverse-depth)
// landmarks eliminated by Schur complement. Pose blocks are addressed by their
// column offset in the dense part.
struct NormalEquations {
  Eigen::MatrixXd h_pp;
  Eigen::VectorXd b_p;

  struct LandmarkBlock {
    double h = 0;
    double b = 0;
    std::map<int, Vec6> cross;  // pose-tangent offset -> accumulated 2x6^T r block
  };
  std::vector<LandmarkBlock> lm;

  void resize(int pose_dim, int n_landmarks) {
    h_pp = Eigen::MatrixXd::Zero(pose_dim, pose_dim);
    b_p = Eigen::VectorXd::Zero(pose_dim);
    lm.assign(n_landmarks, {});
  }

  // Generic dense term: residual r with jacobian blocks at given offsets.
  void add_dense(const std::vector<std::pair<int, Eigen::MatrixXd>>& jacs,
                 const Eigen::VectorXd& r);

  // Visual term touching up to two poses (offset < 0 disables a block) and
  // optionally one landmark (index < 0 disables).
  void add_visual(int off_i, const Eigen::Matrix<double, 2, 6>& jac_i, int off_s,
                  const Eigen::Matrix<double, 2, 6>& jac_s, int lm_index, const Vec2& jac_rho,
                  const Vec2& r);
};

struct LmOptions {
  int max_iterations = 20;
  double rel_decrease_tol = 1e-8;
  double step_norm_tol = 1e-10;
  double gradient_tol = 1e-12;  // max-norm of the normal-equation rhs
  double init_lambda = 1e-6;
  double lambda_up = 10.0;
  double lambda_down = 1.0 / 3.0;
  double min_lambda = 1e-12;
  double max_lambda = 1e12;
  int max_consecutive_rejects = 12;
};

struct LmStats {
  double initial_cost = 0;
  double final_cost = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> accepted_costs;  // including the initial cost
};

// Interface the two bundle adjusters implement.
class LeastSquaresProblem {
 public:
  virtual ~LeastSquaresProblem() = default;
  virtual int pose_dim() const = 0;
  virtual int landmark_count() const = 0;
  // Total cost at the current state; fills normals when non-null. Returns
  // nullopt when the state is invalid (e.g. a point fell behind a camera).
  virtual std::optional<double> evaluate(NormalEquations* normals) = 0;
  virtual void apply_step(const Eigen::VectorXd& d_pose, const Eigen::VectorXd& d_lm) = 0;
  virtual void save_state() = 0;
  virtual void restore_state() = 0;
};

// Damped least squares with accepted-cost monotonicity. Throws
// std::runtime_error on rank-deficient normal equations (non-finite steps at
// maximum damping). When final_normals is non-null it receives the normal
// equations assembled at the final state.
LmStats lm_solve(LeastSquaresProblem& problem, const LmOptions& opts,
                 NormalEquations* final_normals = nullptr);

}  // namespace revio
