#pragma once

#include "revio/math.hpp"

namespace revio {

// Rigid transform: act(x) = q * x + p. Immutable value type.
//
// Tangent convention everywhere in this project: xi = (omega, v), rotation
// first. Optimizer updates are right-multiplicative on the rotation with a
// body-frame translation increment: R <- R * Exp(omega), p <- p + R * v.
struct Pose {
  Quat q{1, 0, 0, 0};
  Vec3 p{0, 0, 0};

  Pose() = default;
  Pose(const Quat& q_in, const Vec3& p_in) : q(q_in.normalized()), p(p_in) {}
  Pose(const Mat3& rot, const Vec3& p_in) : q(Quat(rot).normalized()), p(p_in) {}

  static Pose identity() { return Pose(); }

  Vec3 act(const Vec3& x) const { return q * x + p; }
  Mat3 rot() const { return q.toRotationMatrix(); }

  Pose operator*(const Pose& other) const { return Pose(q * other.q, q * other.p + p); }

  Pose inverse() const {
    const Quat qi = q.conjugate();
    return Pose(qi, -(qi * p));
  }

  // First-order right retraction used by the optimizers.
  Pose retract(const Vec6& xi) const {
    return Pose(q * so3_exp_quat(xi.head<3>()), p + q * xi.tail<3>());
  }
};

// Exact SE(3) exponential: rotation Exp(omega), translation V(omega) * v.
Pose se3_exp(const Vec6& twist);

// Exact SE(3) logarithm, inverse of se3_exp.
Vec6 se3_log(const Pose& pose);

// Adjoint of SE(3) on (omega, v)-ordered twists.
Mat6 se3_adjoint(const Pose& pose);

}  // namespace revio
