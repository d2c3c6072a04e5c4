#include "revio/estimator/factors.hpp"

namespace revio {

std::optional<ProjectionEval> project_body_residual(const CameraIntrinsics& cam,
                                                    const Pose& cam_from_body,
                                                    const Pose& body_i_in_world,
                                                    const Pose& anchor_in_world, const Vec3& bearing,
                                                    double inv_depth, const Vec2& z) {
  if (!(inv_depth > 0)) return std::nullopt;
  const Vec3 x_anchor = bearing / inv_depth;  // anchor body frame
  const Mat3 rot_s = anchor_in_world.rot();
  const Vec3 x_world = rot_s * x_anchor + anchor_in_world.p;
  const Mat3 rot_i = body_i_in_world.rot();
  const Mat3 rot_it = rot_i.transpose();
  const Vec3 x_body = rot_it * (x_world - body_i_in_world.p);
  const Mat3 rot_cb = cam_from_body.rot();
  const Vec3 x_cam = rot_cb * x_body + cam_from_body.p;
  if (x_cam.z() <= kMinDepth) return std::nullopt;

  const auto px = project(cam, x_cam);
  const Eigen::Matrix<double, 2, 3> dpix = project_jacobian(cam, x_cam);

  ProjectionEval out;
  out.residual = *px - z;
  out.jac_pose_i.leftCols<3>() = dpix * (rot_cb * skew(x_body));
  out.jac_pose_i.rightCols<3>() = -dpix * rot_cb;
  const Mat3 chain = rot_cb * rot_it;
  out.jac_pose_anchor.leftCols<3>() = dpix * (chain * (-rot_s * skew(x_anchor)));
  out.jac_pose_anchor.rightCols<3>() = dpix * (chain * rot_s);
  out.jac_inv_depth = dpix * (chain * (rot_s * (-x_anchor / inv_depth)));
  return out;
}

PriorFactor PriorFactor::diagonal(const NavState& lin, const Vec15& information) {
  PriorFactor out;
  out.lin_ = lin;
  out.sqrt_info_ = Eigen::MatrixXd(information.cwiseSqrt().asDiagonal());
  out.r0_ = Eigen::VectorXd::Zero(15);
  return out;
}

PriorFactor PriorFactor::from_information(const NavState& lin, const Mat15& hessian,
                                          const Vec15& rhs, double eps) {
  Eigen::SelfAdjointEigenSolver<Mat15> es(Mat15(0.5 * (hessian + hessian.transpose())));
  const Vec15 evals = es.eigenvalues();
  const double floor = std::max(evals.maxCoeff(), 0.0) * eps;
  int kept = 0;
  for (int i = 0; i < 15; ++i) {
    if (evals[i] > floor && evals[i] > 0) ++kept;
  }
  PriorFactor out;
  out.lin_ = lin;
  out.sqrt_info_.resize(kept, 15);
  out.r0_.resize(kept);
  int row = 0;
  for (int i = 0; i < 15; ++i) {
    if (!(evals[i] > floor && evals[i] > 0)) continue;
    const double s = std::sqrt(evals[i]);
    out.sqrt_info_.row(row) = s * es.eigenvectors().col(i).transpose();
    out.r0_[row] = -es.eigenvectors().col(i).dot(rhs) / s;
    ++row;
  }
  return out;
}

Vec15 PriorFactor::delta(const NavState& state) const {
  Vec15 d;
  const Mat3 rot_lin = lin_.pose_wb.rot();
  d.head<3>() = so3_log(Mat3(rot_lin.transpose() * state.pose_wb.rot()));
  d.segment<3>(3) = rot_lin.transpose() * (state.pose_wb.p - lin_.pose_wb.p);
  d.segment<3>(6) = state.velocity - lin_.velocity;
  d.segment<3>(9) = state.bias.gyro - lin_.bias.gyro;
  d.segment<3>(12) = state.bias.accel - lin_.bias.accel;
  return d;
}

PriorFactor::Eval PriorFactor::evaluate(const NavState& state) const {
  const Vec15 d = delta(state);
  // d(boxminus)/d(state tangent): Jr^-1(dphi) on the rotation block,
  // R_lin^T R on the translation block, identity elsewhere.
  Mat15 dd = Mat15::Identity();
  dd.block<3, 3>(0, 0) = so3_right_jacobian_inv(d.head<3>());
  dd.block<3, 3>(3, 3) = lin_.pose_wb.rot().transpose() * state.pose_wb.rot();
  Eval out;
  out.residual = sqrt_info_ * d + r0_;
  out.jacobian = sqrt_info_ * dd;
  return out;
}

void PriorFactor::apply_world_correction(const Pose& correction) {
  lin_.pose_wb = correction * lin_.pose_wb;
  lin_.velocity = correction.q * lin_.velocity;
  // boxminus components are invariant under a left world transform except the
  // velocity block, which rotates.
  const Mat3 rot = correction.rot();
  const Eigen::MatrixXd cols = sqrt_info_.middleCols<3>(6);
  sqrt_info_.middleCols<3>(6) = cols * rot.transpose();
}

RelPoseEval relative_pose_residual(const Pose& pose_a, const Pose& pose_b,
                                   const RelConstraint& rel) {
  const Mat3 rot_at = pose_a.rot().transpose();
  const Mat3 rot_b = pose_b.rot();
  const Mat3 rot_meas_t = rel.t_rel.rot().transpose();
  const Vec3 p_ab = rot_at * (pose_b.p - pose_a.p);

  RelPoseEval out;
  const Vec3 r_rot = so3_log(Mat3(rot_meas_t * rot_at * rot_b));
  out.residual.head<3>() = r_rot;
  out.residual.tail<3>() = rot_meas_t * (p_ab - rel.t_rel.p);

  out.jac_a.setZero();
  out.jac_b.setZero();
  const Mat3 jl_inv = so3_left_jacobian_inv(r_rot);
  out.jac_a.block<3, 3>(0, 0) = -jl_inv * rot_meas_t;
  out.jac_b.block<3, 3>(0, 0) = so3_right_jacobian_inv(r_rot);
  out.jac_a.block<3, 3>(3, 0) = rot_meas_t * skew(p_ab);
  out.jac_a.block<3, 3>(3, 3) = -rot_meas_t;
  out.jac_b.block<3, 3>(3, 3) = rot_meas_t * rot_at * rot_b;
  return out;
}

Mat6 relative_pose_covariance(const Pose& pose_a, const Pose& pose_b,
                              const Eigen::Matrix<double, 12, 12>& joint_pose_cov) {
  // Sensitivity of the residual to the endpoint tangents, with the measurement
  // equal to the current relative pose (zero residual).
  const Mat3 rot_at = pose_a.rot().transpose();
  const Vec3 p_ab = rot_at * (pose_b.p - pose_a.p);
  Eigen::Matrix<double, 6, 12> jac = Eigen::Matrix<double, 6, 12>::Zero();
  jac.block<3, 3>(0, 0) = -Mat3::Identity();
  jac.block<3, 3>(0, 6) = Mat3::Identity();
  jac.block<3, 3>(3, 0) = skew(p_ab);
  jac.block<3, 3>(3, 3) = -Mat3::Identity();
  jac.block<3, 3>(3, 9) = rot_at * pose_b.rot();
  return jac * joint_pose_cov * jac.transpose();
}

RelConstraint compose_relative(const RelConstraint& ab, const RelConstraint& bc) {
  RelConstraint out;
  out.t_rel = ab.t_rel * bc.t_rel;
  const Mat6 adj = se3_adjoint(bc.t_rel.inverse());
  out.covariance = adj * ab.covariance * adj.transpose() + bc.covariance;
  return out;
}

}  // namespace revio
