#include "sfc/sampling.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace sfc {

namespace {

std::size_t pick_seed(std::size_t n, SeedPolicy seed, std::uint64_t stream) {
  if (seed.kind == SeedPolicy::Kind::kFirst) return 0;
  std::mt19937_64 rng(seed.seed ^ (stream * 0x9E3779B97F4A7C15ULL));
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

// FPS over positions [0, n) where `point(i)` returns the coordinates.
template <typename PointAt>
std::vector<int> fps_impl(std::size_t n, std::size_t count, std::size_t seed_pos, PointAt point) {
  std::vector<int> picked;
  picked.reserve(count);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  std::size_t last = seed_pos;
  picked.push_back(static_cast<int>(last));
  taken[last] = 1;
  while (picked.size() < count) {
    const Vec3 anchor = point(last);
    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double d = squared_distance(point(i), anchor);
      if (d < min_dist[i]) min_dist[i] = d;
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    last = best;
    taken[last] = 1;
    picked.push_back(static_cast<int>(last));
  }
  return picked;
}

}  // namespace

std::vector<int> fps(std::span<const Vec3> xyz, std::size_t count, SeedPolicy seed) {
  if (count < 1 || count > xyz.size()) throw BadCount("fps sample count outside [1, point count]");
  return fps_impl(xyz.size(), count, pick_seed(xyz.size(), seed, 0), [&](std::size_t i) { return xyz[i]; });
}

std::vector<int> fps_subset(std::span<const Vec3> xyz, std::span<const int> ids, std::size_t count,
                            SeedPolicy seed) {
  if (count < 1 || count > ids.size()) throw BadCount("fps sample count outside [1, point count]");
  return fps_impl(ids.size(), count, pick_seed(ids.size(), seed, 0),
                  [&](std::size_t i) { return xyz[static_cast<std::size_t>(ids[i])]; });
}

std::size_t window_sample_count(std::size_t merged, Strides strides) {
  const auto area = static_cast<std::size_t>(strides.rows) * static_cast<std::size_t>(strides.cols);
  return (merged + area - 1) / area;
}

namespace {

// The last window of a row or column may be narrower than the stride.
void append_window(const FrustumGrid& grid, const HashIndex& index, int window_row, int window_col,
                   Strides strides, std::vector<int>& merged) {
  const int v_end = std::min(grid.height(), (window_row + 1) * strides.rows);
  const int u_end = std::min(grid.width(), (window_col + 1) * strides.cols);
  for (int v = window_row * strides.rows; v < v_end; ++v) {
    for (int u = window_col * strides.cols; u < u_end; ++u) visit_frustum_into(index, grid, u, v, merged);
  }
}

}  // namespace

std::vector<int> merged_window(const FrustumGrid& grid, const HashIndex& index, int window_row, int window_col,
                               Strides strides) {
  std::vector<int> merged;
  append_window(grid, index, window_row, window_col, strides, merged);
  return merged;
}

SampledCloud f2ps(const FrustumGrid& grid, const HashIndex& index, std::span<const Vec3> xyz, Strides strides,
                  SeedPolicy seed) {
  if (strides.rows < 1 || strides.cols < 1) throw ConfigError("sampling strides must be at least 1");
  if (xyz.size() != grid.size()) throw ShapeMismatch("cloud and grid differ in point count");
  SampledCloud out;
  out.strides = strides;
  out.parent_size = grid.size();
  out.height = (grid.height() + strides.rows - 1) / strides.rows;
  out.width = (grid.width() + strides.cols - 1) / strides.cols;

  std::vector<int> merged;
  for (int wr = 0; wr < out.height; ++wr) {
    for (int wc = 0; wc < out.width; ++wc) {
      merged.clear();
      append_window(grid, index, wr, wc, strides, merged);
      if (merged.empty()) continue;
      const std::size_t count = window_sample_count(merged.size(), strides);
      const auto stream = static_cast<std::uint64_t>(wr) * static_cast<std::uint64_t>(out.width) +
                          static_cast<std::uint64_t>(wc) + 1;
      const auto picked = fps_impl(merged.size(), count, pick_seed(merged.size(), seed, stream),
                                   [&](std::size_t i) { return xyz[static_cast<std::size_t>(merged[i])]; });
      for (std::size_t order = 0; order < picked.size(); ++order) {
        const int parent = merged[static_cast<std::size_t>(picked[order])];
        out.parent_indices.push_back(parent);
        out.u.push_back(wc);
        out.v.push_back(wr);
        out.m.push_back(static_cast<int>(order));
        out.range.push_back(grid.range(static_cast<std::size_t>(parent)));
      }
    }
  }
  return out;
}

FrustumGrid rebuild_downsampled_grid(const SampledCloud& sampled) {
  return FrustumGrid::from_assignment(sampled.u, sampled.v, sampled.m, sampled.range, sampled.height,
                                      sampled.width);
}

}  // namespace sfc
