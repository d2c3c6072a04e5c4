#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "revio/descriptor.hpp"
#include "revio/io.hpp"
#include "test_util.hpp"

using namespace revio;
namespace fs = std::filesystem;

namespace {
fs::path tmp_file(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "revio_io_test";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("tum trajectory round trip") {
  std::vector<io::TimedPose> traj;
  for (int i = 0; i < 25; ++i) traj.push_back({0.05 * i, test::random_pose()});
  const auto path = tmp_file("traj.tum");
  io::write_tum(path, traj);
  const auto back = io::read_tum(path);
  REQUIRE(back.size() == traj.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    CHECK(std::abs(back[i].timestamp - traj[i].timestamp) < 1e-9);
    CHECK((back[i].pose.p - traj[i].pose.p).norm() < 1e-7);
    CHECK((back[i].pose.rot() - traj[i].pose.rot()).norm() < 1e-7);
  }

  // identical content writes identical bytes
  io::write_tum(tmp_file("traj2.tum"), traj);
  CHECK(io::read_text(path) == io::read_text(tmp_file("traj2.tum")));
}

TEST_CASE("imu csv round trip") {
  std::vector<ImuSample> samples;
  for (int i = 0; i < 50; ++i) {
    samples.push_back({i * 0.005, test::random_vec3(0.5), test::random_vec3(5.0)});
  }
  const auto path = tmp_file("imu.csv");
  io::write_imu_csv(path, samples);
  const auto back = io::read_imu_csv(path);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(std::abs(back[i].t - samples[i].t) < 1e-9);
    CHECK((back[i].gyro - samples[i].gyro).norm() < 1e-7);
    CHECK((back[i].accel - samples[i].accel).norm() < 1e-7);
  }
}

TEST_CASE("config parser") {
  const auto cfg = io::Config::parse(R"(
# comment
[world]
trajectory = circle
radius = 3.5   # trailing comment
landmarks = 240

[run]
mode = "full"
deterministic = true
)");
  CHECK(cfg.get_string("world", "trajectory", "") == "circle");
  CHECK(cfg.get_double("world", "radius", 0) == doctest::Approx(3.5));
  CHECK(cfg.get_int("world", "landmarks", 0) == 240);
  CHECK(cfg.get_string("run", "mode", "") == "full");
  CHECK(cfg.get_bool("run", "deterministic", false));
  CHECK(cfg.get_double("world", "missing", 7.5) == doctest::Approx(7.5));
  CHECK_FALSE(cfg.has("world", "missing"));

  CHECK_THROWS(io::Config::parse("[run\nkey = 1\n"));
  CHECK_THROWS(io::Config::parse("[run]\njust a line\n"));
  const auto bad = io::Config::parse("[run]\nframes = twelve\n");
  CHECK_THROWS(bad.get_int("run", "frames", 0));
}

TEST_CASE("descriptor hex round trip") {
  for (int i = 0; i < 20; ++i) {
    Descriptor256 d;
    for (auto& w : d.words) w = test::rng()();
    const auto hex = d.to_hex();
    CHECK(hex.size() == 64);
    CHECK(Descriptor256::from_hex(hex) == d);
  }
  CHECK_THROWS_AS(Descriptor256::from_hex("abc"), std::invalid_argument);
  CHECK_THROWS_AS(Descriptor256::from_hex(std::string(64, 'x')), std::invalid_argument);
}
