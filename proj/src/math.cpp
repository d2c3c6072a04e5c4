#include "revio/math.hpp"

#include <cmath>

namespace revio {

namespace {
constexpr double kSmallAngle = 1e-8;
}

Mat3 so3_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() + w + 0.5 * w * w;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + std::sin(theta) / theta * w +
         (1.0 - std::cos(theta)) / theta2 * w * w;
}

Quat so3_exp_quat(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  if (theta2 < kSmallAngle * kSmallAngle) {
    Quat q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
    q.normalize();
    return q;
  }
  const double theta = std::sqrt(theta2);
  const double s = std::sin(0.5 * theta) / theta;
  return Quat(std::cos(0.5 * theta), s * omega.x(), s * omega.y(), s * omega.z());
}

Vec3 so3_log(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  const double vn = q.vec().norm();
  if (vn < kSmallAngle) {
    // theta ~ 2*vn/w, direction q.vec()
    return (2.0 / q.w()) * q.vec();
  }
  const double theta = 2.0 * std::atan2(vn, q.w());
  return (theta / vn) * q.vec();
}

Vec3 so3_log(const Mat3& rot) { return so3_log(Quat(rot)); }

Mat3 so3_right_jacobian(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() - 0.5 * w + (1.0 / 6.0) * w * w;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() - (1.0 - std::cos(theta)) / theta2 * w +
         (theta - std::sin(theta)) / (theta2 * theta) * w * w;
}

Mat3 so3_right_jacobian_inv(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const Mat3 w = skew(omega);
  if (theta2 < kSmallAngle * kSmallAngle) {
    return Mat3::Identity() + 0.5 * w + (1.0 / 12.0) * w * w;
  }
  const double theta = std::sqrt(theta2);
  return Mat3::Identity() + 0.5 * w +
         (1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta))) * w * w;
}

}  // namespace revio
