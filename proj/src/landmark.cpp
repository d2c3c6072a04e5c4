#include "revio/landmark.hpp"

#include <stdexcept>

namespace revio {

Vec3 landmark_world_point(const Landmark& lm, const Pose& anchor_pose) {
  if (!(lm.inv_depth > 0)) {
    throw std::invalid_argument("landmark_world_point: inverse depth must be positive");
  }
  return anchor_pose.inverse().act(lm.anchor_bearing / lm.inv_depth);
}

Vec3 landmark_world_point_wb(const Landmark& lm, const Pose& anchor_in_world) {
  if (!(lm.inv_depth > 0)) {
    throw std::invalid_argument("landmark_world_point: inverse depth must be positive");
  }
  return anchor_in_world.act(lm.anchor_bearing / lm.inv_depth);
}

}  // namespace revio
