#pragma once

#include <Eigen/Dense>

namespace revio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat15 = Eigen::Matrix<double, 15, 15>;
using Quat = Eigen::Quaterniond;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// SO(3) exponential map; Taylor expansion below 1e-8 rad.
Mat3 so3_exp(const Vec3& omega);
Quat so3_exp_quat(const Vec3& omega);

// SO(3) logarithm, angle in [0, pi].
Vec3 so3_log(const Mat3& rot);
Vec3 so3_log(const Quat& q);

// Right and left Jacobians of SO(3) and their inverses.
Mat3 so3_right_jacobian(const Vec3& omega);
Mat3 so3_right_jacobian_inv(const Vec3& omega);
inline Mat3 so3_left_jacobian(const Vec3& omega) { return so3_right_jacobian(-omega); }
inline Mat3 so3_left_jacobian_inv(const Vec3& omega) { return so3_right_jacobian_inv(-omega); }

}  // namespace revio
