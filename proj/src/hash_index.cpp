#include "sfc/hash_index.hpp"

#include <limits>

namespace sfc {

std::int64_t encode_key(int u, int v, int m, int width, int max_frustum) {
  if (width < 1 || max_frustum < 1) throw KeyOverflow("key encoding needs positive width and frustum size");
  if (u < 0 || u >= width || m < 0 || m >= max_frustum || v < 0) {
    throw KeyOverflow("frustum key component outside the encodable domain");
  }
  const auto limit = static_cast<unsigned __int128>(1) << 63;
  const auto span = static_cast<unsigned __int128>(v + 1) * static_cast<unsigned>(width) *
                    static_cast<unsigned>(max_frustum);
  if (span > limit) throw KeyOverflow("frustum key exceeds 63 bits");
  const std::int64_t row = static_cast<std::int64_t>(width) * max_frustum;
  return static_cast<std::int64_t>(v) * row + static_cast<std::int64_t>(u) * max_frustum + m;
}

FrustumKey decode_key(std::int64_t key, int width, int max_frustum) {
  const std::int64_t row = static_cast<std::int64_t>(width) * max_frustum;
  FrustumKey k;
  k.v = static_cast<int>(key / row);
  const std::int64_t rest = key % row;
  k.u = static_cast<int>(rest / max_frustum);
  k.m = static_cast<int>(rest % max_frustum);
  return k;
}

HashIndex HashIndex::build(const FrustumGrid& grid) {
  HashIndex index;
  index.width_ = grid.width();
  index.height_ = grid.height();
  if (grid.size() == 0) return index;
  index.max_frustum_ = grid.max_frustum_size();
  // Probe the largest key once so overflow surfaces before any insertion.
  encode_key(index.width_ - 1, index.height_ - 1, index.max_frustum_ - 1, index.width_, index.max_frustum_);
  index.table_.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto key = encode_key(grid.u(k), grid.v(k), grid.m(k), index.width_, index.max_frustum_);
    index.table_.emplace(key, static_cast<int>(k));
  }
  return index;
}

std::optional<int> HashIndex::query(int u, int v, int m) const {
  if (u < 0 || u >= width_ || v < 0 || v >= height_ || m < 0 || m >= max_frustum_) return std::nullopt;
  const std::int64_t key = static_cast<std::int64_t>(v) * width_ * max_frustum_ +
                           static_cast<std::int64_t>(u) * max_frustum_ + m;
  const auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

void visit_frustum_into(const HashIndex& index, const FrustumGrid& grid, int u, int v,
                        std::vector<int>& out) {
  auto current = index.query(u, v, 0);
  if (!current) return;
  const std::size_t limit = grid.size();
  std::size_t steps = 0;
  int m = 0;
  while (true) {
    if (++steps > limit) throw CorruptIndicator("frustum walk exceeded the cloud size");
    out.push_back(*current);
    if (grid.indicator(static_cast<std::size_t>(*current)) == 0) return;
    ++m;
    current = index.query(u, v, m);
    if (!current) throw CorruptIndicator("indicator points past the end of a frustum");
  }
}

std::vector<int> visit_frustum(const HashIndex& index, const FrustumGrid& grid, int u, int v) {
  std::vector<int> out;
  visit_frustum_into(index, grid, u, v, out);
  return out;
}

}  // namespace sfc
