#pragma once

#include <optional>

#include "revio/camera.hpp"
#include "revio/landmark.hpp"

namespace revio {

// Reprojection residual pi(T_i o X_j) - z_ij with X_j = T_sj^-1 o (bearing/rho).
// Both poses map world coordinates into their camera frame. Jacobians are with
// respect to the right tangent (omega, v) of each pose and to rho.
struct VisualResidualEval {
  Vec2 residual;
  Eigen::Matrix<double, 2, 6> jac_pose_i;
  Eigen::Matrix<double, 2, 6> jac_pose_anchor;
  Vec2 jac_inv_depth;
};

std::optional<VisualResidualEval> visual_residual(const CameraIntrinsics& cam, const Pose& pose_i,
                                                  const Pose& pose_anchor, const Landmark& lm,
                                                  const Vec2& z_ij);

}  // namespace revio
