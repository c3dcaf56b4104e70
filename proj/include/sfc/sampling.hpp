#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sfc/frustum.hpp"
#include "sfc/geometry.hpp"
#include "sfc/hash_index.hpp"

namespace sfc {

struct SeedPolicy {
  enum class Kind { kFirst, kRandom };
  Kind kind = Kind::kFirst;
  std::uint64_t seed = 0;

  static SeedPolicy first() { return {}; }
  static SeedPolicy random(std::uint64_t seed) { return {Kind::kRandom, seed}; }
};

// Farthest point sampling: starts from the seed, then repeatedly adds the
// point with the largest Euclidean distance to the sampled set (ties to the
// smaller index). Throws BadCount unless 1 <= count <= xyz.size().
std::vector<int> fps(std::span<const Vec3> xyz, std::size_t count, SeedPolicy seed = SeedPolicy::first());

// Same, over a subset of a larger cloud. Returned values are positions in `ids`.
std::vector<int> fps_subset(std::span<const Vec3> xyz, std::span<const int> ids, std::size_t count,
                            SeedPolicy seed = SeedPolicy::first());

struct Strides {
  int rows = 2;
  int cols = 2;
};

// Output of frustum farthest point sampling. Every stride window maps to one
// downsampled cell; m' is the sampling order inside the window.
struct SampledCloud {
  std::vector<int> parent_indices;
  std::vector<int> u;
  std::vector<int> v;
  std::vector<int> m;
  std::vector<double> range;
  Strides strides;
  std::size_t parent_size = 0;
  int height = 0;
  int width = 0;

  std::size_t size() const { return parent_indices.size(); }
};

// Number of points a window of `merged` points keeps: ceil(L / (S_h * S_w)).
std::size_t window_sample_count(std::size_t merged, Strides strides);

// Merged point set of window (row, col) in (v, u, m) order.
std::vector<int> merged_window(const FrustumGrid& grid, const HashIndex& index, int window_row, int window_col,
                               Strides strides);

// Splits the plane into S_h x S_w windows, merges each window's frustums
// and runs fps on the merged set, seeded at its first point by default.
SampledCloud f2ps(const FrustumGrid& grid, const HashIndex& index, std::span<const Vec3> xyz, Strides strides,
                  SeedPolicy seed = SeedPolicy::first());

FrustumGrid rebuild_downsampled_grid(const SampledCloud& sampled);

}  // namespace sfc
