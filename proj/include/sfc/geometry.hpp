#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sfc/matrix.hpp"

namespace sfc {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double squared_distance(const Vec3& a, const Vec3& b);

// Number of input feature channels: x, y, z, range, intensity.
inline constexpr std::size_t kInputChannels = 5;

// A raw LiDAR scan. `features` is kept in sync with xyz/intensity by the
// factory functions; the network consumes it after normalization.
struct PointCloud {
  std::vector<Vec3> xyz;
  std::vector<double> intensity;
  std::optional<std::vector<std::uint32_t>> labels;
  Matrix features;

  std::size_t size() const { return xyz.size(); }

  // Builds a cloud and assembles its (x, y, z, range, intensity) features.
  // Throws NonFinitePoint, or CountMismatch when lengths disagree.
  static PointCloud from_points(std::vector<Vec3> xyz, std::vector<double> intensity,
                                std::optional<std::vector<std::uint32_t>> labels = std::nullopt);

  // Subset of rows, labels included when present.
  PointCloud select(std::span<const int> ids) const;
};

Matrix assemble_features(std::span<const Vec3> xyz, std::span<const double> intensity);

// Projection geometry of the spherical range image. Angles are radians.
struct SphericalConfig {
  int height = 64;
  int width = 1800;
  double fov_up = 0.0;
  double fov_down = 0.0;
  bool wrap_azimuth = true;

  double fov() const { return fov_up + fov_down; }
  // Throws ConfigError if the geometry is degenerate.
  void validate() const;

  static SphericalConfig from_degrees(int height, int width, double fov_up_deg,
                                      double fov_down_deg, bool wrap_azimuth = true);
  // 64-beam sensor at 64x1800, 3 deg up / 25 deg down.
  static SphericalConfig kitti64();
  // 32-beam sensor at 32x1024, 10 deg up / 30 deg down.
  static SphericalConfig nuscenes32();
};

struct ProjectedPoint {
  int u = 0;
  int v = 0;
  double range = 0.0;

  friend bool operator==(const ProjectedPoint&, const ProjectedPoint&) = default;
};

// Continuous image coordinates before floor and clamp.
struct ContinuousCoord {
  double u = 0.0;
  double v = 0.0;
};

ContinuousCoord spherical_coordinates(const Vec3& p, const SphericalConfig& config);

// Projects every point onto the range image: floor, then clamp into the grid.
// Throws ZeroRangePoint for a point at the origin.
std::vector<ProjectedPoint> project_cloud(std::span<const Vec3> xyz, const SphericalConfig& config);

// Per-channel normalization statistics for the five input channels.
class NormStats {
 public:
  // Throws ConfigError unless every standard deviation is positive and finite.
  NormStats(std::array<double, kInputChannels> mean, std::array<double, kInputChannels> stddev);

  // Dataset statistics of SemanticKITTI.
  static NormStats semantic_kitti();
  static NormStats identity();

  const std::array<double, kInputChannels>& mean() const { return mean_; }
  const std::array<double, kInputChannels>& stddev() const { return stddev_; }

 private:
  std::array<double, kInputChannels> mean_;
  std::array<double, kInputChannels> stddev_;
};

Matrix normalize_features(const Matrix& features, const NormStats& stats);
Matrix denormalize_features(const Matrix& features, const NormStats& stats);

}  // namespace sfc
