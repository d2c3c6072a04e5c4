#pragma once

#include <vector>

#include "revio/pose.hpp"

namespace revio::eval {

struct TrajectoryRecord {
  std::vector<double> timestamps;  // strictly increasing
  std::vector<Pose> poses;

  void push(double t, const Pose& pose);
  size_t size() const { return timestamps.size(); }
};

// Closed-form rigid alignment (rotation + translation, scale fixed to 1)
// minimizing sum |R a_i + t - b_i|^2.
struct Alignment {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

Alignment align_rigid(const std::vector<Vec3>& from, const std::vector<Vec3>& to);

// RMSE of translation differences after rigid alignment; associates poses by
// nearest timestamp within max_dt. Throws std::invalid_argument with fewer
// than 3 common timestamps.
double ate_rmse(const TrajectoryRecord& estimate, const TrajectoryRecord& truth,
                double max_dt = 0.005);

// Per-landmark track accounting for time-span / tracking-length statistics.
struct TrackRow {
  int anchor_frame = 0;       // s_j
  int newest_frame = 0;       // i
  int measurement_count = 0;  // |Z_j|
};

struct TrackStats {
  double ats = 0;  // mean time span, frames
  double atl = 0;  // mean tracking length, frames
  int landmarks = 0;
};

// Means of TS = i - s_j and TL = |Z_j| over all rows. Throws on empty input.
TrackStats track_stats(const std::vector<TrackRow>& rows);

}  // namespace revio::eval
