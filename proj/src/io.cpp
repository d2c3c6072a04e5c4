#include "revio/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "revio/descriptor.hpp"

namespace revio {

std::string Descriptor256::to_hex() const {
  static const char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (int w = 0; w < 4; ++w) {
    for (int nib = 15; nib >= 0; --nib) {
      out.push_back(digits[(words[w] >> (4 * nib)) & 0xf]);
    }
  }
  return out;
}

Descriptor256 Descriptor256::from_hex(const std::string& hex) {
  if (hex.size() != 64) throw std::invalid_argument("Descriptor256::from_hex: need 64 hex chars");
  Descriptor256 d;
  for (int w = 0; w < 4; ++w) {
    std::uint64_t v = 0;
    for (int i = 0; i < 16; ++i) {
      const char c = hex[16 * w + i];
      std::uint64_t nib;
      if (c >= '0' && c <= '9') nib = c - '0';
      else if (c >= 'a' && c <= 'f') nib = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') nib = c - 'A' + 10;
      else throw std::invalid_argument("Descriptor256::from_hex: bad character");
      v = (v << 4) | nib;
    }
    d.words[w] = v;
  }
  return d;
}

}  // namespace revio

namespace revio::io {

std::string format_tum(const std::vector<TimedPose>& traj) {
  std::string out;
  char line[256];
  for (const auto& tp : traj) {
    std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", tp.timestamp,
                  tp.pose.p.x(), tp.pose.p.y(), tp.pose.p.z(), tp.pose.q.x(), tp.pose.q.y(),
                  tp.pose.q.z(), tp.pose.q.w());
    out += line;
  }
  return out;
}

void write_tum(const std::filesystem::path& path, const std::vector<TimedPose>& traj) {
  write_text(path, format_tum(traj));
}

std::vector<TimedPose> read_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_tum: cannot open " + path.string());
  std::vector<TimedPose> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error("read_tum: malformed line: " + line);
    }
    out.push_back({t, Pose(Quat(qw, qx, qy, qz), Vec3(tx, ty, tz))});
  }
  return out;
}

void write_imu_csv(const std::filesystem::path& path, const std::vector<ImuSample>& samples) {
  std::string out = "#timestamp_ns,gx,gy,gz,ax,ay,az\n";
  char line[256];
  for (const auto& s : samples) {
    std::snprintf(line, sizeof(line), "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                  static_cast<long long>(std::llround(s.t * 1e9)), s.gyro.x(), s.gyro.y(),
                  s.gyro.z(), s.accel.x(), s.accel.y(), s.accel.z());
    out += line;
  }
  write_text(path, out);
}

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_imu_csv: cannot open " + path.string());
  std::vector<ImuSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ss(line);
    long long t_ns;
    ImuSample s;
    if (!(ss >> t_ns >> s.gyro.x() >> s.gyro.y() >> s.gyro.z() >> s.accel.x() >> s.accel.y() >>
          s.accel.z())) {
      throw std::runtime_error("read_imu_csv: malformed line: " + line);
    }
    s.t = t_ns * 1e-9;
    out.push_back(s);
  }
  return out;
}

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error("config: unterminated section at line " + std::to_string(lineno));
      }
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: expected key = value at line " + std::to_string(lineno));
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
    }
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) { return parse(read_text(path)); }

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.contains(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  size_t pos = 0;
  const double out = std::stod(v, &pos);
  if (pos != v.size()) throw std::runtime_error("config: bad number for " + section + "." + key);
  return out;
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  size_t pos = 0;
  const int out = std::stoi(v, &pos);
  if (pos != v.size()) throw std::runtime_error("config: bad integer for " + section + "." + key);
  return out;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::runtime_error("config: bad boolean for " + section + "." + key);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_text: cannot open " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_text: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace revio::io
