#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sfc/frustum.hpp"

namespace sfc {

struct FrustumKey {
  int u = 0;
  int v = 0;
  int m = 0;

  friend bool operator==(const FrustumKey&, const FrustumKey&) = default;
};

// v * (W * M) + u * M + m. Throws KeyOverflow when u, m fall outside
// [0, W) x [0, M) or (v + 1) * W * M exceeds 2^63.
std::int64_t encode_key(int u, int v, int m, int width, int max_frustum);
FrustumKey decode_key(std::int64_t key, int width, int max_frustum);

// Maps (u, v, m) to the id of the point stored there.
class HashIndex {
 public:
  HashIndex() = default;

  static HashIndex build(const FrustumGrid& grid);

  std::optional<int> query(int u, int v, int m) const;

  std::size_t size() const { return table_.size(); }
  int width() const { return width_; }
  int height() const { return height_; }
  int max_frustum() const { return max_frustum_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int max_frustum_ = 0;
  std::unordered_map<std::int64_t, int> table_;
};

// Ids of the points of cell (u, v) in ascending m, following indicators from
// (u, v, 0). Empty when the cell is unoccupied. Throws CorruptIndicator when
// the chain breaks or runs longer than the cloud.
std::vector<int> visit_frustum(const HashIndex& index, const FrustumGrid& grid, int u, int v);

// Same walk, appending to `out` instead of allocating.
void visit_frustum_into(const HashIndex& index, const FrustumGrid& grid, int u, int v,
                        std::vector<int>& out);

}  // namespace sfc
