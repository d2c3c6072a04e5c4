#pragma once

#include <optional>

#include "revio/pose.hpp"

namespace revio {

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  bool valid() const {
    return fx > 0 && fy > 0 && cx > 0 && cx < width && cy > 0 && cy < height;
  }
  bool in_image(const Vec2& px, double margin = 0.0) const {
    return px.x() >= margin && px.x() <= width - 1 - margin && px.y() >= margin &&
           px.y() <= height - 1 - margin;
  }
};

// Stereo pair; right_in_left maps right-camera coordinates into the left
// camera frame (baseline along +x, meters).
struct StereoRig {
  CameraIntrinsics left;
  CameraIntrinsics right;
  Pose right_in_left;

  double baseline() const { return right_in_left.p.norm(); }
};

inline constexpr double kMinDepth = 1e-6;

// Pinhole projection; empty when the point is at or behind the camera plane.
std::optional<Vec2> project(const CameraIntrinsics& cam, const Vec3& point_cam);

// d(pixel)/d(point_cam) at point_cam; requires z > kMinDepth.
Eigen::Matrix<double, 2, 3> project_jacobian(const CameraIntrinsics& cam, const Vec3& point_cam);

// z=1-normalized ray through a pixel.
Vec3 unproject(const CameraIntrinsics& cam, const Vec2& px);

}  // namespace revio
