#include "revio/pose.hpp"

namespace revio {

Pose se3_exp(const Vec6& twist) {
  const Vec3 omega = twist.head<3>();
  const Vec3 v = twist.tail<3>();
  // V(omega) equals the left Jacobian of SO(3).
  return Pose(so3_exp_quat(omega), so3_left_jacobian(omega) * v);
}

Vec6 se3_log(const Pose& pose) {
  Vec6 twist;
  const Vec3 omega = so3_log(pose.q);
  twist.head<3>() = omega;
  twist.tail<3>() = so3_left_jacobian_inv(omega) * pose.p;
  return twist;
}

Mat6 se3_adjoint(const Pose& pose) {
  const Mat3 rot = pose.rot();
  Mat6 adj = Mat6::Zero();
  adj.topLeftCorner<3, 3>() = rot;
  adj.bottomRightCorner<3, 3>() = rot;
  adj.bottomLeftCorner<3, 3>() = skew(pose.p) * rot;
  return adj;
}

}  // namespace revio
