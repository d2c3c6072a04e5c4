#pragma once

#include "revio/estimator/types.hpp"

namespace revio {

// Reprojection residual with the body pose in the world frame (the estimator's
// state convention): x_cam = cam_from_body o T_wb^-1 o (T_wb_anchor o bearing/rho).
// Jacobians are with respect to the right tangent of the two body poses and rho.
struct ProjectionEval {
  Vec2 residual;
  Eigen::Matrix<double, 2, 6> jac_pose_i;
  Eigen::Matrix<double, 2, 6> jac_pose_anchor;
  Vec2 jac_inv_depth;
};

std::optional<ProjectionEval> project_body_residual(const CameraIntrinsics& cam,
                                                    const Pose& cam_from_body,
                                                    const Pose& body_i_in_world,
                                                    const Pose& anchor_in_world, const Vec3& bearing,
                                                    double inv_depth, const Vec2& z);

// Marginalization prior over one 15-dim state, in square-root information
// form: r(x) = sqrt_info * boxminus(x, lin) + r0.
class PriorFactor {
 public:
  PriorFactor() = default;

  // Diagonal prior (initial gauge fix).
  static PriorFactor diagonal(const NavState& lin, const Vec15& information);

  // From a marginalized energy 1/2 d^T H d - b^T d around lin. Eigenvalues
  // below eps * max are truncated.
  static PriorFactor from_information(const NavState& lin, const Mat15& hessian, const Vec15& rhs,
                                      double eps = 1e-12);

  bool valid() const { return sqrt_info_.rows() > 0; }
  int rows() const { return static_cast<int>(sqrt_info_.rows()); }
  const NavState& linearization() const { return lin_; }

  // boxminus of state against the linearization point.
  Vec15 delta(const NavState& state) const;

  struct Eval {
    Eigen::VectorXd residual;
    Eigen::MatrixXd jacobian;  // rows x 15
  };
  Eval evaluate(const NavState& state) const;

  // Left-multiply the world frame by a correction (global BA commit).
  void apply_world_correction(const Pose& correction);

 private:
  NavState lin_;
  Eigen::MatrixXd sqrt_info_;  // rows x 15
  Eigen::VectorXd r0_;
};

// Relative SE(3) factor between two body poses, whitened by the constraint
// covariance. Residual: (Log(R^ᵀ R_a^ᵀ R_b), R^ᵀ (R_a^ᵀ (p_b - p_a) - p^)).
struct RelPoseEval {
  Vec6 residual;
  Mat6 jac_a;  // w.r.t. pose-a right tangent
  Mat6 jac_b;
};

RelPoseEval relative_pose_residual(const Pose& pose_a, const Pose& pose_b, const RelConstraint& rel);

// Unwhitened residual covariance of the relative-pose constraint given the
// joint covariance of the two endpoint pose tangents (6+6).
Mat6 relative_pose_covariance(const Pose& pose_a, const Pose& pose_b,
                              const Eigen::Matrix<double, 12, 12>& joint_pose_cov);

// First-order composition of chained relative constraints.
RelConstraint compose_relative(const RelConstraint& ab, const RelConstraint& bc);

}  // namespace revio
