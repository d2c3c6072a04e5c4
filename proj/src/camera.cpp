#include "revio/camera.hpp"

namespace revio {

std::optional<Vec2> project(const CameraIntrinsics& cam, const Vec3& point_cam) {
  if (point_cam.z() <= kMinDepth) return std::nullopt;
  const double iz = 1.0 / point_cam.z();
  return Vec2(cam.fx * point_cam.x() * iz + cam.cx, cam.fy * point_cam.y() * iz + cam.cy);
}

Eigen::Matrix<double, 2, 3> project_jacobian(const CameraIntrinsics& cam, const Vec3& point_cam) {
  const double iz = 1.0 / point_cam.z();
  const double iz2 = iz * iz;
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx * iz, 0, -cam.fx * point_cam.x() * iz2,
         0, cam.fy * iz, -cam.fy * point_cam.y() * iz2;
  return jac;
}

Vec3 unproject(const CameraIntrinsics& cam, const Vec2& px) {
  return Vec3((px.x() - cam.cx) / cam.fx, (px.y() - cam.cy) / cam.fy, 1.0);
}

}  // namespace revio
