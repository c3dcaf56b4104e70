#include "sfc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace sfc {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

long parse_int(const std::string& key, const std::string& value) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) throw ConfigError(key + ": not an integer: " + value);
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  double out = 0.0;
  if (!(is >> out) || !is.eof()) throw ConfigError(key + ": not a number: " + value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw ConfigError(key + ": not a boolean: " + value);
}

std::vector<long> parse_list(const std::string& key, const std::string& value) {
  std::vector<long> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  return out;
}

}  // namespace

NormStats RunConfig::norm_stats() const {
  return normalize_semantic_kitti ? NormStats::semantic_kitti() : NormStats::identity();
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  constexpr double kDeg = std::numbers::pi / 180.0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset") {
      if (value == "kitti64") cfg.projection = SphericalConfig::kitti64();
      else if (value == "nuscenes32") cfg.projection = SphericalConfig::nuscenes32();
      else throw ConfigError("unknown preset: " + value);
    } else if (key == "height") {
      cfg.projection.height = static_cast<int>(parse_int(key, value));
    } else if (key == "width") {
      cfg.projection.width = static_cast<int>(parse_int(key, value));
    } else if (key == "fov_up_deg") {
      cfg.projection.fov_up = parse_double(key, value) * kDeg;
    } else if (key == "fov_down_deg") {
      cfg.projection.fov_down = parse_double(key, value) * kDeg;
    } else if (key == "wrap_azimuth") {
      cfg.projection.wrap_azimuth = parse_bool(key, value);
      cfg.network.wrap_azimuth = cfg.projection.wrap_azimuth;
    } else if (key == "channels") {
      cfg.network.channels = static_cast<int>(parse_int(key, value));
    } else if (key == "classes") {
      cfg.network.classes = static_cast<int>(parse_int(key, value));
    } else if (key == "blocks") {
      const auto blocks = parse_list(key, value);
      if (blocks.size() != cfg.network.extraction_blocks.size()) throw ConfigError("blocks needs four counts");
      for (std::size_t i = 0; i < blocks.size(); ++i) cfg.network.extraction_blocks[i] = static_cast<int>(blocks[i]);
    } else if (key == "kernel_size") {
      cfg.network.kernel_size = static_cast<int>(parse_int(key, value));
    } else if (key == "strides") {
      const auto s = parse_list(key, value);
      if (s.size() != 2) throw ConfigError("strides needs two values");
      cfg.network.strides = {static_cast<int>(s[0]), static_cast<int>(s[1])};
    } else if (key == "bn_eps") {
      cfg.network.bn_eps = parse_double(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "normalization") {
      if (value == "semantic_kitti") cfg.normalize_semantic_kitti = true;
      else if (value == "identity") cfg.normalize_semantic_kitti = false;
      else throw ConfigError("unknown normalization: " + value);
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  cfg.projection.validate();
  cfg.network.validate();
  return cfg;
}

RunConfig read_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace sfc
