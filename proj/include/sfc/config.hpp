#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sfc/geometry.hpp"
#include "sfc/network.hpp"

namespace sfc {

// Settings shared by the command-line tools. File format is one
// `key = value` per line, '#' starts a comment. Keys:
//   height, width, fov_up_deg, fov_down_deg, wrap_azimuth      projection
//   preset = kitti64 | nuscenes32                              projection defaults
//   channels, classes, blocks (e.g. 2,2,2,2), kernel_size,
//   strides (e.g. 2,2), bn_eps, seed                           network
//   normalization = semantic_kitti | identity
struct RunConfig {
  SphericalConfig projection = SphericalConfig::kitti64();
  NetworkConfig network = NetworkConfig::desk();
  bool normalize_semantic_kitti = true;
  std::uint64_t seed = 0;

  NormStats norm_stats() const;
};

// Throws ConfigError for unknown keys or unparsable values.
RunConfig parse_run_config(const std::string& text);
RunConfig read_run_config(const std::filesystem::path& path);

}  // namespace sfc
