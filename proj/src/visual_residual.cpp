#include "revio/visual_residual.hpp"

#include <stdexcept>

namespace revio {

std::optional<VisualResidualEval> visual_residual(const CameraIntrinsics& cam, const Pose& pose_i,
                                                  const Pose& pose_anchor, const Landmark& lm,
                                                  const Vec2& z_ij) {
  if (!(lm.inv_depth > 0)) {
    throw std::invalid_argument("visual_residual: inverse depth must be positive");
  }
  const Vec3 a = lm.anchor_bearing / lm.inv_depth;  // anchor camera coords
  const Mat3 rot_s = pose_anchor.rot();
  const Vec3 x_world = rot_s.transpose() * (a - pose_anchor.p);
  const Mat3 rot_i = pose_i.rot();
  const Vec3 x_cam = rot_i * x_world + pose_i.p;
  if (x_cam.z() <= kMinDepth) return std::nullopt;

  const auto px = project(cam, x_cam);
  const Eigen::Matrix<double, 2, 3> dpix = project_jacobian(cam, x_cam);

  VisualResidualEval out;
  out.residual = *px - z_ij;

  // x_cam under right perturbation of T_i: d/domega = -R_i skew(x_world), d/dv = R_i.
  out.jac_pose_i.leftCols<3>() = dpix * (-rot_i * skew(x_world));
  out.jac_pose_i.rightCols<3>() = dpix * rot_i;

  // x_world under right perturbation of T_sj: d/domega = skew(x_world), d/dv = -I.
  out.jac_pose_anchor.leftCols<3>() = dpix * rot_i * skew(x_world);
  out.jac_pose_anchor.rightCols<3>() = dpix * (-rot_i);

  out.jac_inv_depth = dpix * (rot_i * (rot_s.transpose() * (-a / lm.inv_depth)));
  return out;
}

}  // namespace revio
