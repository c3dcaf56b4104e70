#include "sfc/frustum.hpp"

#include <algorithm>
#include <numeric>

namespace sfc {

namespace {

void check_dims(int height, int width) {
  if (height < 1 || width < 1) throw ConfigError("grid height and width must be at least 1");
}

}  // namespace

FrustumGrid FrustumGrid::build(std::span<const ProjectedPoint> projected, int height, int width) {
  check_dims(height, width);
  const std::size_t n = projected.size();
  FrustumGrid grid;
  grid.height_ = height;
  grid.width_ = width;
  grid.u_.resize(n);
  grid.v_.resize(n);
  grid.m_.resize(n);
  grid.indicator_.resize(n);
  grid.range_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const ProjectedPoint& p = projected[k];
    if (p.u < 0 || p.u >= width || p.v < 0 || p.v >= height) throw OutOfBounds(k);
    grid.u_[k] = p.u;
    grid.v_[k] = p.v;
    grid.range_[k] = p.range;
  }

  grid.order_.resize(n);
  std::iota(grid.order_.begin(), grid.order_.end(), 0);
  std::stable_sort(grid.order_.begin(), grid.order_.end(), [&](int a, int b) {
    return grid.cell_key(grid.u_[a], grid.v_[a]) < grid.cell_key(grid.u_[b], grid.v_[b]);
  });

  // Run counting over the sorted order: points ahead give m, points behind give the indicator.
  grid.cell_count_.reserve(n);
  std::size_t run_start = 0;
  while (run_start < n) {
    const int first = grid.order_[run_start];
    const std::int64_t key = grid.cell_key(grid.u_[first], grid.v_[first]);
    std::size_t run_end = run_start + 1;
    while (run_end < n) {
      const int next = grid.order_[run_end];
      if (grid.cell_key(grid.u_[next], grid.v_[next]) != key) break;
      ++run_end;
    }
    const int count = static_cast<int>(run_end - run_start);
    for (std::size_t i = run_start; i < run_end; ++i) {
      const int id = grid.order_[i];
      grid.m_[id] = static_cast<int>(i - run_start);
      grid.indicator_[id] = i + 1 < run_end ? 1 : 0;
    }
    grid.cell_count_.emplace(key, count);
    run_start = run_end;
  }
  return grid;
}

FrustumGrid FrustumGrid::from_assignment(std::vector<int> u, std::vector<int> v, std::vector<int> m,
                                         std::vector<double> range, int height, int width) {
  check_dims(height, width);
  const std::size_t n = u.size();
  if (v.size() != n || m.size() != n || range.size() != n) {
    throw ShapeMismatch("frustum assignment vectors differ in length");
  }
  FrustumGrid grid;
  grid.height_ = height;
  grid.width_ = width;
  for (std::size_t k = 0; k < n; ++k) {
    if (u[k] < 0 || u[k] >= width || v[k] < 0 || v[k] >= height || m[k] < 0) throw OutOfBounds(k);
  }
  grid.u_ = std::move(u);
  grid.v_ = std::move(v);
  grid.m_ = std::move(m);
  grid.range_ = std::move(range);

  grid.order_.resize(n);
  std::iota(grid.order_.begin(), grid.order_.end(), 0);
  std::sort(grid.order_.begin(), grid.order_.end(), [&](int a, int b) {
    const auto ka = grid.cell_key(grid.u_[a], grid.v_[a]);
    const auto kb = grid.cell_key(grid.u_[b], grid.v_[b]);
    if (ka != kb) return ka < kb;
    if (grid.m_[a] != grid.m_[b]) return grid.m_[a] < grid.m_[b];
    return a < b;
  });

  grid.indicator_.assign(n, 0);
  std::size_t run_start = 0;
  while (run_start < n) {
    const int first = grid.order_[run_start];
    const std::int64_t key = grid.cell_key(grid.u_[first], grid.v_[first]);
    std::size_t run_end = run_start;
    while (run_end < n) {
      const int id = grid.order_[run_end];
      if (grid.cell_key(grid.u_[id], grid.v_[id]) != key) break;
      if (grid.m_[id] != static_cast<int>(run_end - run_start)) {
        throw CorruptIndicator("frustum indices of a cell are not contiguous from 0");
      }
      ++run_end;
    }
    for (std::size_t i = run_start; i < run_end; ++i) {
      grid.indicator_[grid.order_[i]] = i + 1 < run_end ? 1 : 0;
    }
    grid.cell_count_.emplace(key, static_cast<int>(run_end - run_start));
    run_start = run_end;
  }
  return grid;
}

int FrustumGrid::frustum_size(int u, int v) const {
  if (u < 0 || u >= width_ || v < 0 || v >= height_) return 0;
  const auto it = cell_count_.find(cell_key(u, v));
  return it == cell_count_.end() ? 0 : it->second;
}

int FrustumGrid::max_frustum_size() const {
  if (u_.empty()) throw EmptyCloud();
  int best = 0;
  for (const auto& [key, count] : cell_count_) best = std::max(best, count);
  return best;
}

}  // namespace sfc
