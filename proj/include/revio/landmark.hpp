#pragma once

#include "revio/descriptor.hpp"
#include "revio/pose.hpp"

namespace revio {

// Inverse-depth landmark. The anchor bearing is a z=1-normalized ray in the
// anchor frame's left camera; measurements stay in pixels.
struct Landmark {
  int id = -1;
  int anchor_frame = -1;
  Vec3 anchor_bearing{0, 0, 1};
  double inv_depth = 1.0;
  Descriptor256 descriptor;
};

// World coordinates of the landmark. anchor_pose maps world coordinates into
// the anchor camera frame, i.e. X_w = anchor_pose^-1 o (bearing / rho).
// Throws std::invalid_argument for non-positive inverse depth.
Vec3 landmark_world_point(const Landmark& lm, const Pose& anchor_pose);

// Same with the anchor camera's pose expressed in the world frame
// (x_w = anchor_in_world o x_cam), the form the estimators use.
Vec3 landmark_world_point_wb(const Landmark& lm, const Pose& anchor_in_world);

}  // namespace revio
