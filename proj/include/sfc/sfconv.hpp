#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sfc/frustum.hpp"
#include "sfc/hash_index.hpp"
#include "sfc/matrix.hpp"

namespace sfc {

// K x K convolution weights. Layout is offset-major, then output channel,
// then input channel. Offset i = (dv + K/2) * K + (du + K/2).
struct ConvKernel {
  int size = 1;
  int in_channels = 0;
  int out_channels = 0;
  std::vector<double> weights;
  std::optional<std::vector<double>> bias;

  static ConvKernel zeros(int size, int in_channels, int out_channels, bool with_bias = false);

  int offsets() const { return size * size; }
  double& weight(int offset, int out, int in) {
    return weights[(static_cast<std::size_t>(offset) * out_channels + out) * in_channels + in];
  }
  double weight(int offset, int out, int in) const {
    return weights[(static_cast<std::size_t>(offset) * out_channels + out) * in_channels + in];
  }
  // Throws ShapeMismatch for an even size or inconsistent buffers.
  void validate() const;
};

inline int kernel_offset(int du, int dv, int size) {
  const int half = size / 2;
  return (dv + half) * size + (du + half);
}

struct GatherEntry {
  int offset = 0;
  int source = 0;

  friend bool operator==(const GatherEntry&, const GatherEntry&) = default;
};

// For every center, the selected source point of each valid kernel cell.
class GatherPlan {
 public:
  GatherPlan() : row_start_{0} {}

  void add(int offset, int source) { entries_.push_back({offset, source}); }
  void finish_center() { row_start_.push_back(static_cast<int>(entries_.size())); }

  std::size_t centers() const { return row_start_.size() - 1; }
  std::span<const GatherEntry> entries(std::size_t center) const {
    return std::span<const GatherEntry>(entries_).subspan(
        static_cast<std::size_t>(row_start_[center]),
        static_cast<std::size_t>(row_start_[center + 1] - row_start_[center]));
  }
  // Number of valid kernel cells of a center.
  int valid_count(std::size_t center) const { return row_start_[center + 1] - row_start_[center]; }
  std::size_t total_entries() const { return entries_.size(); }

  friend bool operator==(const GatherPlan&, const GatherPlan&) = default;

 private:
  std::vector<int> row_start_;
  std::vector<GatherEntry> entries_;
};

// A convolution center given by its cell and range. The center need not be
// a point of the gathered grid (see the upsampling gather).
struct CenterQuery {
  int u = 0;
  int v = 0;
  double range = 0.0;
};

std::vector<CenterQuery> centers_of(const FrustumGrid& grid, std::span<const int> ids);
std::vector<CenterQuery> all_centers(const FrustumGrid& grid);

// For each kernel cell of each center, picks the point of that frustum whose
// range is closest to the center's range, ties to the smaller m. u wraps
// modulo the grid width when `wrap_azimuth`; rows never wrap.
GatherPlan gather_neighbors(std::span<const CenterQuery> centers, const FrustumGrid& grid,
                            const HashIndex& index, int kernel_size, bool wrap_azimuth);
GatherPlan gather_neighbors(std::span<const int> center_ids, const FrustumGrid& grid,
                            const HashIndex& index, int kernel_size, bool wrap_azimuth);

struct UpsampleRate {
  int rows = 1;
  int cols = 1;
};

// Gather on a coarse grid for centers on the fine plane. Only kernel cells
// whose fine coordinates are multiples of the rate map to coarse cells.
GatherPlan gather_upsampled(std::span<const CenterQuery> fine_centers, const FrustumGrid& coarse_grid,
                            const HashIndex& coarse_index, UpsampleRate rate, int kernel_size,
                            bool wrap_azimuth, int fine_height, int fine_width);

// Sum of W_i * f_j over the plan entries of every center, plus bias.
Matrix sfc_forward(const Matrix& features, const GatherPlan& plan, const ConvKernel& kernel);

struct SfcGradients {
  Matrix features;
  std::vector<double> weights;
  std::vector<double> bias;
};

// Transpose of sfc_forward with respect to features, weights and bias.
SfcGradients sfc_backward(const Matrix& grad_out, const GatherPlan& plan, const ConvKernel& kernel,
                          const Matrix& features);

Matrix upsample_sfc_forward(const Matrix& coarse_features, const FrustumGrid& coarse_grid,
                            const HashIndex& coarse_index, std::span<const CenterQuery> fine_centers,
                            UpsampleRate rate, const ConvKernel& kernel, bool wrap_azimuth,
                            int fine_height, int fine_width);

// Kernel file: text header terminated by "end\n", then little-endian float32
// weights (offset-major, C_out, C_in) followed by the bias when present.
void write_kernel(const std::filesystem::path& path, const ConvKernel& kernel);
ConvKernel read_kernel(const std::filesystem::path& path);

}  // namespace sfc
