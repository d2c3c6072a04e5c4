#pragma once

#include "revio/estimator/global_map.hpp"
#include "revio/estimator/sliding_window.hpp"
#include "revio/eval/metrics.hpp"
#include "revio/io.hpp"
#include "revio/reid/reid.hpp"
#include "revio/sim/simulator.hpp"

namespace revio {

enum class RunMode { kBaseline, kStsOnly, kPgmOnly, kFull };

const char* run_mode_name(RunMode mode);
RunMode run_mode_from_name(const std::string& name);  // throws on unknown

struct PipelineConfig {
  // world
  sim::TrajectorySpec trajectory;
  int n_landmarks = 240;
  double wall_radius = 8.0;
  double wall_height = 3.0;
  double frame_rate = 20.0;
  double imu_rate = 200.0;
  std::uint64_t world_seed = 1;

  // run
  int n_frames = 600;
  double pixel_noise_sigma = 1.0;
  bool imu_noise = true;
  ImuBias true_bias;
  std::uint64_t seed = 0;
  RunMode mode = RunMode::kFull;
  bool parallel = false;

  sim::BreakageModel breakage;
  EstimatorConfig estimator;
  reid::ReidConfig reid;
  int global_ba_every_kf = 5;
};

// Fills a PipelineConfig from sectioned key/value text; unknown keys are
// rejected so typos fail loudly.
PipelineConfig parse_pipeline_config(const io::Config& cfg);

struct PipelineResult {
  eval::TrajectoryRecord estimate;
  eval::TrajectoryRecord ground_truth;
  std::vector<reid::ReidFrameLog> reid_log;
  double ate_rmse = 0;
  eval::TrackStats tracks;
  int keyframes = 0;
  int reid_accepted = 0;
  int reid_correct = 0;   // accepted matches binding the true landmark
  int reid_discarded = 0; // rejected by the mean-reprojection gate
  int submap_builds = 0;
  int max_submap_size = 0;
  int max_accepted_distance = -1;       // Hamming bits over kept matches
  double worst_surviving_reid_mean_px = 0;  // Eq. 6 mean over augmented landmarks at run end
  bool local_costs_monotone = true;
  bool global_costs_monotone = true;
  std::uint64_t map_version = 0;
  std::string map_dump;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

// Serialization of per-frame re-identification logs (CSV) and metrics.
std::string format_reid_log(const std::vector<reid::ReidFrameLog>& log);
std::string format_metrics(const PipelineResult& result);

// Table II style ablation: baseline, sts-only, pgm-only, full over the given
// seeds; returns ATE per mode averaged over seeds.
struct AblationRow {
  RunMode mode;
  double mean_ate = 0;
  std::vector<double> per_seed;
};
std::vector<AblationRow> run_ablation(const PipelineConfig& base,
                                      const std::vector<std::uint64_t>& seeds);
std::string format_ablation(const std::vector<AblationRow>& rows);

}  // namespace revio
