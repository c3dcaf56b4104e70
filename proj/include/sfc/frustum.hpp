#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "sfc/geometry.hpp"

namespace sfc {

// Lossless organization of a projected cloud. Every point keeps its cell
// (u, v), its index m inside the cell's frustum and an end-of-frustum
// indicator that is 0 only for the last point of the frustum.
class FrustumGrid {
 public:
  FrustumGrid() = default;

  // Stable sort by (v, u) followed by run counting; within a frustum, m
  // follows scan order. Throws OutOfBounds for a coordinate outside the grid.
  static FrustumGrid build(std::span<const ProjectedPoint> projected, int height, int width);

  // Grid from an explicit (u, v, m) assignment, e.g. after downsampling.
  // m values of every cell must be exactly {0, ..., count - 1}.
  static FrustumGrid from_assignment(std::vector<int> u, std::vector<int> v, std::vector<int> m,
                                     std::vector<double> range, int height, int width);

  std::size_t size() const { return u_.size(); }
  int height() const { return height_; }
  int width() const { return width_; }

  int u(std::size_t k) const { return u_[k]; }
  int v(std::size_t k) const { return v_[k]; }
  int m(std::size_t k) const { return m_[k]; }
  std::uint8_t indicator(std::size_t k) const { return indicator_[k]; }
  double range(std::size_t k) const { return range_[k]; }

  std::span<const int> u() const { return u_; }
  std::span<const int> v() const { return v_; }
  std::span<const int> m() const { return m_; }
  std::span<const std::uint8_t> indicators() const { return indicator_; }
  std::span<const double> ranges() const { return range_; }
  // Point ids sorted by (v, u, m).
  std::span<const int> order() const { return order_; }

  // Point count of cell (u, v); 0 when unoccupied or outside the grid.
  int frustum_size(int u, int v) const;
  // Largest frustum. Throws EmptyCloud for an empty grid.
  int max_frustum_size() const;
  std::size_t occupied_cells() const { return cell_count_.size(); }
  const std::unordered_map<std::int64_t, int>& cell_counts() const { return cell_count_; }

  std::int64_t cell_key(int u, int v) const {
    return static_cast<std::int64_t>(v) * width_ + u;
  }

  friend bool operator==(const FrustumGrid&, const FrustumGrid&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<int> u_;
  std::vector<int> v_;
  std::vector<int> m_;
  std::vector<std::uint8_t> indicator_;
  std::vector<double> range_;
  std::vector<int> order_;
  std::unordered_map<std::int64_t, int> cell_count_;
};

}  // namespace sfc
