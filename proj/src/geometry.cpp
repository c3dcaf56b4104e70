#include "sfc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sfc {

double Vec3::norm() const { return std::sqrt(x * x + y * y + z * z); }

double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

Matrix gather_rows(const Matrix& src, std::span<const int> indices) {
  Matrix out(indices.size(), src.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto from = src.row(static_cast<std::size_t>(indices[i]));
    std::copy(from.begin(), from.end(), out.row(i).begin());
  }
  return out;
}

Matrix concat_cols(std::span<const Matrix* const> parts) {
  if (parts.empty()) return {};
  const std::size_t rows = parts.front()->rows();
  std::size_t cols = 0;
  for (const Matrix* m : parts) {
    if (m->rows() != rows) throw ShapeMismatch("concat_cols: row counts differ");
    cols += m->cols();
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r).begin();
    for (const Matrix* m : parts) dst = std::copy(m->row(r).begin(), m->row(r).end(), dst);
  }
  return out;
}

Matrix assemble_features(std::span<const Vec3> xyz, std::span<const double> intensity) {
  if (xyz.size() != intensity.size()) throw CountMismatch("intensity count differs from point count");
  Matrix out(xyz.size(), kInputChannels);
  for (std::size_t k = 0; k < xyz.size(); ++k) {
    const Vec3& p = xyz[k];
    out(k, 0) = p.x;
    out(k, 1) = p.y;
    out(k, 2) = p.z;
    out(k, 3) = p.norm();
    out(k, 4) = intensity[k];
  }
  return out;
}

PointCloud PointCloud::from_points(std::vector<Vec3> xyz, std::vector<double> intensity,
                                   std::optional<std::vector<std::uint32_t>> labels) {
  for (std::size_t k = 0; k < xyz.size(); ++k) {
    const Vec3& p = xyz[k];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) throw NonFinitePoint(k);
  }
  if (labels && labels->size() != xyz.size()) throw CountMismatch("label count differs from point count");
  PointCloud cloud;
  cloud.features = assemble_features(xyz, intensity);
  cloud.xyz = std::move(xyz);
  cloud.intensity = std::move(intensity);
  cloud.labels = std::move(labels);
  return cloud;
}

PointCloud PointCloud::select(std::span<const int> ids) const {
  PointCloud out;
  out.xyz.reserve(ids.size());
  out.intensity.reserve(ids.size());
  for (int id : ids) {
    out.xyz.push_back(xyz[static_cast<std::size_t>(id)]);
    out.intensity.push_back(intensity[static_cast<std::size_t>(id)]);
  }
  if (labels) {
    std::vector<std::uint32_t> sub;
    sub.reserve(ids.size());
    for (int id : ids) sub.push_back((*labels)[static_cast<std::size_t>(id)]);
    out.labels = std::move(sub);
  }
  out.features = gather_rows(features, ids);
  return out;
}

void SphericalConfig::validate() const {
  if (height < 1 || width < 1) throw ConfigError("projection height and width must be at least 1");
  if (!std::isfinite(fov_up) || !std::isfinite(fov_down) || !(fov() > 0.0)) {
    throw ConfigError("vertical field of view must be positive");
  }
}

SphericalConfig SphericalConfig::from_degrees(int height, int width, double fov_up_deg,
                                              double fov_down_deg, bool wrap_azimuth) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  SphericalConfig c{height, width, fov_up_deg * kDeg, fov_down_deg * kDeg, wrap_azimuth};
  c.validate();
  return c;
}

SphericalConfig SphericalConfig::kitti64() { return from_degrees(64, 1800, 3.0, 25.0); }

SphericalConfig SphericalConfig::nuscenes32() { return from_degrees(32, 1024, 10.0, 30.0); }

ContinuousCoord spherical_coordinates(const Vec3& p, const SphericalConfig& config) {
  const double r = p.norm();
  const double azimuth = std::atan2(p.y, p.x);
  const double elevation = std::asin(std::clamp(p.z / r, -1.0, 1.0));
  ContinuousCoord c;
  c.u = 0.5 * (1.0 - azimuth / std::numbers::pi) * config.width;
  c.v = (1.0 - (elevation + config.fov_down) / config.fov()) * config.height;
  return c;
}

std::vector<ProjectedPoint> project_cloud(std::span<const Vec3> xyz, const SphericalConfig& config) {
  config.validate();
  std::vector<ProjectedPoint> out(xyz.size());
  for (std::size_t k = 0; k < xyz.size(); ++k) {
    const double r = xyz[k].norm();
    if (r == 0.0) throw ZeroRangePoint(k);
    if (!std::isfinite(r)) throw NonFinitePoint(k);
    const ContinuousCoord c = spherical_coordinates(xyz[k], config);
    const double u = std::clamp(std::floor(c.u), 0.0, static_cast<double>(config.width - 1));
    const double v = std::clamp(std::floor(c.v), 0.0, static_cast<double>(config.height - 1));
    out[k] = ProjectedPoint{static_cast<int>(u), static_cast<int>(v), r};
  }
  return out;
}

NormStats::NormStats(std::array<double, kInputChannels> mean, std::array<double, kInputChannels> stddev)
    : mean_(mean), stddev_(stddev) {
  for (double s : stddev_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("normalization standard deviations must be positive");
  }
}

NormStats NormStats::semantic_kitti() {
  return NormStats({10.88, 0.23, -1.04, 12.12, 0.21}, {11.47, 6.91, 0.86, 12.32, 0.16});
}

NormStats NormStats::identity() { return NormStats({0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}); }

Matrix normalize_features(const Matrix& features, const NormStats& stats) {
  if (features.cols() != kInputChannels) throw ShapeMismatch("normalize_features expects 5 channels");
  Matrix out = features;
  for (std::size_t k = 0; k < out.rows(); ++k) {
    for (std::size_t c = 0; c < kInputChannels; ++c) {
      out(k, c) = (out(k, c) - stats.mean()[c]) / stats.stddev()[c];
    }
  }
  return out;
}

Matrix denormalize_features(const Matrix& features, const NormStats& stats) {
  if (features.cols() != kInputChannels) throw ShapeMismatch("denormalize_features expects 5 channels");
  Matrix out = features;
  for (std::size_t k = 0; k < out.rows(); ++k) {
    for (std::size_t c = 0; c < kInputChannels; ++c) {
      out(k, c) = out(k, c) * stats.stddev()[c] + stats.mean()[c];
    }
  }
  return out;
}

}  // namespace sfc
