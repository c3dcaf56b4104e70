#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfc/frustum.hpp"
#include "sfc/geometry.hpp"
#include "sfc/hash_index.hpp"
#include "sfc/matrix.hpp"
#include "sfc/sampling.hpp"
#include "sfc/sfconv.hpp"

namespace sfc {

inline constexpr int kExtractionLayers = 4;
inline constexpr int kUpsampledLayers = kExtractionLayers - 1;

struct NetworkConfig {
  int channels = 32;
  int classes = 20;
  std::array<int, kExtractionLayers> extraction_blocks{2, 2, 2, 2};
  int kernel_size = 3;
  Strides strides{2, 2};
  double bn_eps = 1e-5;
  bool wrap_azimuth = true;

  // Output widths of the three context layers: C/2, C, C.
  std::array<int, 3> context_widths() const;
  // Cumulative sampling rate of extraction layer `layer` (1-based).
  UpsampleRate layer_rate(int layer) const;
  // Upsampling kernel for a rate: 3 for 2x, 7 for 4x, 15 for 8x.
  int upsample_kernel(int layer) const;
  int head_input() const { return 5 * channels; }

  // Throws ConfigError.
  void validate() const;

  static NetworkConfig desk(int classes = 20);
  // Full-width topologies: 3/3/5/2 blocks, C = 128 with 19 classes or C = 256 with 16.
  static NetworkConfig semantic_kitti();
  static NetworkConfig nuscenes();
};

struct BatchNorm {
  std::vector<double> scale;
  std::vector<double> shift;
  std::vector<double> mean;
  std::vector<double> var;

  static BatchNorm identity(int channels);
  std::size_t channels() const { return scale.size(); }
};

struct SfcLayerParams {
  ConvKernel conv;
  BatchNorm bn;
};

struct SfcBlockParams {
  SfcLayerParams first;
  SfcLayerParams second;
};

// First layer gathers from the parent cloud at the sampled centers.
struct DownsampleBlockParams {
  SfcLayerParams strided;
  SfcLayerParams second;
};

struct ExtractionParams {
  std::optional<DownsampleBlockParams> downsample;
  std::vector<SfcBlockParams> blocks;
};

struct LinearParams {
  Matrix weight;  // out x in
  std::vector<double> bias;
};

struct LayerParams {
  std::vector<SfcLayerParams> context;
  std::array<ExtractionParams, kExtractionLayers> extraction;
  std::array<SfcLayerParams, kUpsampledLayers> upsample;
  std::vector<SfcLayerParams> head;
  LinearParams classifier;
  std::array<LinearParams, kExtractionLayers> auxiliary;

  // Uniform in +-1/sqrt(fan_in) from a seeded generator; batch norms start as identity.
  static LayerParams initialize(const NetworkConfig& cfg, std::uint64_t seed);
  // Checks every shape against the configuration. Throws ShapeMismatch.
  void validate(const NetworkConfig& cfg) const;
};

// Flat list of all parameter buffers with stable names.
std::vector<std::pair<std::string, std::vector<double>*>> named_tensors(LayerParams& params);

// Weight file: a text manifest of "tensor <name> <count>" lines ending in
// "end\n", followed by each tensor as little-endian float32 in manifest order.
void write_weights(const std::filesystem::path& path, LayerParams& params);
LayerParams read_weights(const std::filesystem::path& path, const NetworkConfig& cfg);

double hardswish(double x);
Matrix hardswish(const Matrix& x);

Matrix bn_inference(const Matrix& x, const BatchNorm& bn, double eps);

Matrix linear_forward(const Matrix& x, const LinearParams& linear);

// One resolution of the cloud with its frustum structure.
struct ScaleState {
  std::vector<Vec3> xyz;
  FrustumGrid grid;
  HashIndex index;
  Matrix features;
  // Ids into the previous scale; empty for the input scale.
  std::vector<int> parent_indices;

  std::size_t size() const { return xyz.size(); }
  static ScaleState from_projection(std::vector<Vec3> xyz, std::span<const ProjectedPoint> projected, int height,
                                    int width, Matrix features);
};

// SFC, batch norm, Hardswish with a prepared plan.
Matrix sfc_layer_forward(const Matrix& features, const GatherPlan& plan, const SfcLayerParams& layer, double eps);
// Two layers plus the identity shortcut, on the scale's own grid.
Matrix sfc_block_forward(const Matrix& features, const GatherPlan& plan, const SfcBlockParams& block, double eps);
// F2PS, strided layer from the parent, second layer on the sampled grid, shortcut from the sampled inputs.
ScaleState downsample_block_forward(const ScaleState& parent, const DownsampleBlockParams& block,
                                    const NetworkConfig& cfg);

struct ForwardResult {
  Matrix logits;
  std::array<Matrix, kExtractionLayers> auxiliary_logits;
  std::array<std::size_t, kExtractionLayers> scale_sizes{};
};

// Per-point logits for every input point. Throws EmptyCloud, ShapeMismatch.
ForwardResult sfcnet_forward(const PointCloud& cloud, const LayerParams& params, const NetworkConfig& cfg,
                             const SphericalConfig& projection, const NormStats& stats);

// Index of the largest logit of each row.
std::vector<std::uint32_t> argmax_rows(const Matrix& logits);

}  // namespace sfc
