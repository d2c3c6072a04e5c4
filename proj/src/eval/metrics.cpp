#include "revio/eval/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace revio::eval {

void TrajectoryRecord::push(double t, const Pose& pose) {
  if (!timestamps.empty() && t <= timestamps.back()) {
    throw std::invalid_argument("TrajectoryRecord: timestamps must be strictly increasing");
  }
  timestamps.push_back(t);
  poses.push_back(pose);
}

Alignment align_rigid(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  if (from.size() != to.size() || from.size() < 3) {
    throw std::invalid_argument("align_rigid: need >= 3 paired points");
  }
  const int n = static_cast<int>(from.size());
  Vec3 mean_from = Vec3::Zero(), mean_to = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    mean_from += from[i];
    mean_to += to[i];
  }
  mean_from /= n;
  mean_to /= n;

  Mat3 cov = Mat3::Zero();
  for (int i = 0; i < n; ++i) {
    cov += (to[i] - mean_to) * (from[i] - mean_from).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 sign = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) sign(2, 2) = -1;
  Alignment out;
  out.rotation = svd.matrixU() * sign * svd.matrixV().transpose();
  out.translation = mean_to - out.rotation * mean_from;
  return out;
}

double ate_rmse(const TrajectoryRecord& estimate, const TrajectoryRecord& truth, double max_dt) {
  std::vector<Vec3> est_pts, gt_pts;
  size_t j = 0;
  for (size_t i = 0; i < estimate.size(); ++i) {
    const double t = estimate.timestamps[i];
    while (j + 1 < truth.size() &&
           std::abs(truth.timestamps[j + 1] - t) <= std::abs(truth.timestamps[j] - t)) {
      ++j;
    }
    if (j < truth.size() && std::abs(truth.timestamps[j] - t) <= max_dt) {
      est_pts.push_back(estimate.poses[i].p);
      gt_pts.push_back(truth.poses[j].p);
    }
  }
  if (est_pts.size() < 3) {
    throw std::invalid_argument("ate_rmse: fewer than 3 common timestamps");
  }
  const Alignment a = align_rigid(est_pts, gt_pts);
  double sum = 0;
  for (size_t i = 0; i < est_pts.size(); ++i) {
    sum += (a.rotation * est_pts[i] + a.translation - gt_pts[i]).squaredNorm();
  }
  return std::sqrt(sum / est_pts.size());
}

TrackStats track_stats(const std::vector<TrackRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("track_stats: empty map");
  TrackStats out;
  out.landmarks = static_cast<int>(rows.size());
  for (const auto& r : rows) {
    if (r.newest_frame < r.anchor_frame || r.measurement_count < 1) {
      throw std::invalid_argument("track_stats: malformed row");
    }
    out.ats += r.newest_frame - r.anchor_frame;
    out.atl += r.measurement_count;
  }
  out.ats /= out.landmarks;
  out.atl /= out.landmarks;
  return out;
}

}  // namespace revio::eval
