#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sfc/geometry.hpp"

namespace sfc {

// KITTI velodyne scan: little-endian float32 records (x, y, z, intensity).
// Throws MalformedScan when the length is not a multiple of 16, IoError otherwise.
PointCloud read_scan(const std::filesystem::path& path);
void write_scan(const std::filesystem::path& path, const PointCloud& cloud);

// SemanticKITTI label file: one little-endian uint32 per point, semantic
// class in the low 16 bits. Returns class ids. Throws MalformedLabels for a
// length that is not a multiple of 4 and CountMismatch for a wrong count.
std::vector<std::uint32_t> read_labels(const std::filesystem::path& path, std::size_t expected_points);
std::vector<std::uint32_t> read_raw_labels(const std::filesystem::path& path);
void write_raw_labels(const std::filesystem::path& path, std::span<const std::uint32_t> raw);

// Label file with zero instance bits. Throws BadLabel for ids >= 2^16.
void write_predictions(const std::filesystem::path& path, std::span<const std::uint32_t> predictions);

}  // namespace sfc
