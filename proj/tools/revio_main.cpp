#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "revio/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace revio;

PipelineConfig load_config(const std::string& path) {
  return parse_pipeline_config(io::Config::load(path));
}

std::vector<io::TimedPose> to_timed(const eval::TrajectoryRecord& rec) {
  std::vector<io::TimedPose> out;
  for (size_t i = 0; i < rec.size(); ++i) out.push_back({rec.timestamps[i], rec.poses[i]});
  return out;
}

eval::TrajectoryRecord from_timed(const std::vector<io::TimedPose>& traj) {
  eval::TrajectoryRecord rec;
  for (const auto& tp : traj) rec.push(tp.timestamp, tp.pose);
  return rec;
}

int cmd_simulate(const std::string& config_path, int seed, const std::string& out_dir) {
  PipelineConfig cfg = load_config(config_path);
  if (seed >= 0) cfg.seed = seed;
  const auto world = sim::make_cylinder_world(cfg.world_seed, cfg.n_landmarks, cfg.wall_radius,
                                              cfg.wall_height, cfg.trajectory, cfg.estimator.rig,
                                              cfg.frame_rate, cfg.imu_rate);
  const auto gt = sim::generate_trajectory(world, cfg.n_frames);
  const auto imu = sim::generate_imu(world, cfg.n_frames, cfg.estimator.imu, cfg.imu_noise,
                                     cfg.true_bias, cfg.seed);
  std::vector<io::TimedPose> traj;
  for (const auto& s : gt) traj.push_back({s.timestamp, s.pose_wb});
  io::write_tum(fs::path(out_dir) / "groundtruth.tum", traj);
  io::write_imu_csv(fs::path(out_dir) / "imu.csv", imu);
  std::printf("wrote %s and %s (%d frames, %zu imu samples)\n",
              (fs::path(out_dir) / "groundtruth.tum").c_str(),
              (fs::path(out_dir) / "imu.csv").c_str(), cfg.n_frames, imu.size());
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& mode, int seed,
            const std::string& threads, const std::string& out_dir) {
  PipelineConfig cfg = load_config(config_path);
  if (!mode.empty()) cfg.mode = run_mode_from_name(mode);
  if (seed >= 0) cfg.seed = seed;
  if (!threads.empty()) {
    if (threads == "sequential") cfg.parallel = false;
    else if (threads == "parallel") cfg.parallel = true;
    else throw CLI::ValidationError("--threads must be sequential or parallel");
  }

  const auto result = run_pipeline(cfg);

  const fs::path dir(out_dir);
  io::write_tum(dir / "groundtruth.tum", to_timed(result.ground_truth));
  io::write_tum(dir / "estimate.tum", to_timed(result.estimate));
  io::write_text(dir / "reid_log.csv", format_reid_log(result.reid_log));
  io::write_text(dir / "metrics.txt", format_metrics(result));
  io::write_text(dir / "map.txt", result.map_dump);
  std::printf("mode: %s\nseed: %llu\n%s", run_mode_name(cfg.mode),
              static_cast<unsigned long long>(cfg.seed), format_metrics(result).c_str());
  return 0;
}

int cmd_eval(const std::string& est_path, const std::string& gt_path) {
  const auto est = from_timed(io::read_tum(est_path));
  const auto gt = from_timed(io::read_tum(gt_path));
  std::printf("ate_rmse_m: %.9g\n", eval::ate_rmse(est, gt));
  return 0;
}

int cmd_ablation(const std::string& config_path, const std::string& seeds_csv,
                 const std::string& out_file) {
  PipelineConfig cfg = load_config(config_path);
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(seeds_csv);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) seeds.push_back(std::stoull(part));
  }
  if (seeds.empty()) throw CLI::ValidationError("--seeds needs at least one seed");

  const auto rows = run_ablation(cfg, seeds);
  const std::string table = format_ablation(rows);
  std::printf("%s", table.c_str());
  if (!out_file.empty()) io::write_text(out_file, table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stereo-inertial SLAM with feature re-identification on synthetic scenes"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", mode, threads, est_path, gt_path;
  std::string seeds_csv = "1,2,3,4,5", out_file;
  int seed = -1;

  auto* simulate = app.add_subcommand("simulate", "write ground truth and IMU streams");
  simulate->add_option("--config", config_path)->required();
  simulate->add_option("--seed", seed);
  simulate->add_option("--out", out_dir);

  auto* run = app.add_subcommand("run", "run the estimator and write artifacts");
  run->add_option("--config", config_path)->required();
  run->add_option("--mode", mode)->description("baseline|sts_only|pgm_only|full|reid");
  run->add_option("--seed", seed);
  run->add_option("--threads", threads)->description("sequential|parallel");
  run->add_option("--out", out_dir);

  auto* evalc = app.add_subcommand("eval", "ATE between two TUM trajectories");
  evalc->add_option("--est", est_path)->required();
  evalc->add_option("--gt", gt_path)->required();

  auto* ablation = app.add_subcommand("ablation", "ATE over the four method configurations");
  ablation->add_option("--config", config_path)->required();
  ablation->add_option("--seeds", seeds_csv)->description("comma-separated run seeds");
  ablation->add_option("--out", out_file);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, seed, out_dir);
    if (run->parsed()) return cmd_run(config_path, mode, seed, threads, out_dir);
    if (evalc->parsed()) return cmd_eval(est_path, gt_path);
    if (ablation->parsed()) return cmd_ablation(config_path, seeds_csv, out_file);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    const std::string what = e.what();
    std::fprintf(stderr, "error: %s\n", what.c_str());
    // configuration problems exit 2, runtime failures exit 1
    return what.starts_with("config") || what.find("cannot open") != std::string::npos ? 2 : 1;
  }
  return 0;
}
