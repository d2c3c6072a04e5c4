#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "revio/imu_types.hpp"
#include "revio/pose.hpp"

namespace revio::io {

struct TimedPose {
  double timestamp = 0;
  Pose pose;
};

// TUM trajectory text: "timestamp tx ty tz qx qy qz qw" per line, 9
// significant digits. Lines starting with '#' are ignored on read.
std::string format_tum(const std::vector<TimedPose>& traj);
void write_tum(const std::filesystem::path& path, const std::vector<TimedPose>& traj);
std::vector<TimedPose> read_tum(const std::filesystem::path& path);

// EuRoC-style IMU CSV: "timestamp_ns,gx,gy,gz,ax,ay,az".
void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples);
std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);

// Flat sectioned key/value config text:
//   [section]
//   key = value   # comment
// Values stay as strings; typed accessors parse on demand.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace revio::io
