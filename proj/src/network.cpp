#include "sfc/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "sfc/binary.hpp"

namespace sfc {

std::array<int, 3> NetworkConfig::context_widths() const {
  return {std::max(1, channels / 2), channels, channels};
}

UpsampleRate NetworkConfig::layer_rate(int layer) const {
  UpsampleRate rate;
  for (int l = 1; l < layer; ++l) {
    rate.rows *= strides.rows;
    rate.cols *= strides.cols;
  }
  return rate;
}

int NetworkConfig::upsample_kernel(int layer) const {
  const UpsampleRate rate = layer_rate(layer);
  return 2 * std::max(rate.rows, rate.cols) - 1;
}

void NetworkConfig::validate() const {
  if (channels < 1) throw ConfigError("network channels must be at least 1");
  if (classes < 2) throw ConfigError("network needs at least two classes");
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ConfigError("kernel size must be odd and positive");
  if (strides.rows < 1 || strides.cols < 1) throw ConfigError("strides must be at least 1");
  for (int b : extraction_blocks) {
    if (b < 0) throw ConfigError("block counts must be non-negative");
  }
  if (!(bn_eps > 0.0)) throw ConfigError("batch norm epsilon must be positive");
}

NetworkConfig NetworkConfig::desk(int classes) {
  NetworkConfig cfg;
  cfg.classes = classes;
  return cfg;
}

NetworkConfig NetworkConfig::semantic_kitti() {
  NetworkConfig cfg;
  cfg.channels = 128;
  cfg.classes = 19;
  cfg.extraction_blocks = {3, 3, 5, 2};
  return cfg;
}

NetworkConfig NetworkConfig::nuscenes() {
  NetworkConfig cfg = semantic_kitti();
  cfg.channels = 256;
  cfg.classes = 16;
  return cfg;
}

BatchNorm BatchNorm::identity(int channels) {
  const auto c = static_cast<std::size_t>(channels);
  return BatchNorm{std::vector<double>(c, 1.0), std::vector<double>(c, 0.0), std::vector<double>(c, 0.0),
                   std::vector<double>(c, 1.0)};
}

namespace {

SfcLayerParams make_layer(int kernel, int in, int out, std::mt19937_64* rng) {
  SfcLayerParams layer{ConvKernel::zeros(kernel, in, out), BatchNorm::identity(out)};
  if (rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(kernel * kernel * in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : layer.conv.weights) w = dist(*rng);
  }
  return layer;
}

LinearParams make_linear(int in, int out, std::mt19937_64* rng) {
  LinearParams lin{Matrix(static_cast<std::size_t>(out), static_cast<std::size_t>(in)),
                   std::vector<double>(static_cast<std::size_t>(out), 0.0)};
  if (rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& w : lin.weight.data()) w = dist(*rng);
  }
  return lin;
}

LayerParams build_params(const NetworkConfig& cfg, std::mt19937_64* rng) {
  cfg.validate();
  const int c = cfg.channels;
  const int k = cfg.kernel_size;
  LayerParams p;
  int in = static_cast<int>(kInputChannels);
  for (int width : cfg.context_widths()) {
    p.context.push_back(make_layer(k, in, width, rng));
    in = width;
  }
  for (int l = 0; l < kExtractionLayers; ++l) {
    ExtractionParams& layer = p.extraction[static_cast<std::size_t>(l)];
    if (l > 0) layer.downsample = DownsampleBlockParams{make_layer(k, c, c, rng), make_layer(k, c, c, rng)};
    for (int b = 0; b < cfg.extraction_blocks[static_cast<std::size_t>(l)]; ++b) {
      layer.blocks.push_back(SfcBlockParams{make_layer(k, c, c, rng), make_layer(k, c, c, rng)});
    }
  }
  for (int l = 0; l < kUpsampledLayers; ++l) {
    p.upsample[static_cast<std::size_t>(l)] = make_layer(cfg.upsample_kernel(l + 2), c, c, rng);
  }
  p.head.push_back(make_layer(k, cfg.head_input(), 2 * c, rng));
  p.head.push_back(make_layer(k, 2 * c, c, rng));
  p.classifier = make_linear(c, cfg.classes, rng);
  for (auto& aux : p.auxiliary) aux = make_linear(c, cfg.classes, rng);
  return p;
}

void check_layer(const SfcLayerParams& layer, int kernel, int in, int out) {
  layer.conv.validate();
  if (layer.conv.size != kernel || layer.conv.in_channels != in || layer.conv.out_channels != out) {
    throw ShapeMismatch("layer kernel shape differs from the configuration");
  }
  const auto c = static_cast<std::size_t>(out);
  const BatchNorm& bn = layer.bn;
  if (bn.scale.size() != c || bn.shift.size() != c || bn.mean.size() != c || bn.var.size() != c) {
    throw ShapeMismatch("batch norm width differs from the layer output");
  }
  for (double v : bn.var) {
    if (!(v >= 0.0)) throw ShapeMismatch("batch norm variance must be non-negative");
  }
}

void check_linear(const LinearParams& lin, int in, int out) {
  if (lin.weight.rows() != static_cast<std::size_t>(out) || lin.weight.cols() != static_cast<std::size_t>(in) ||
      lin.bias.size() != static_cast<std::size_t>(out)) {
    throw ShapeMismatch("linear layer shape differs from the configuration");
  }
}

void name_layer(std::vector<std::pair<std::string, std::vector<double>*>>& out, const std::string& prefix,
                SfcLayerParams& layer) {
  out.emplace_back(prefix + ".conv.weight", &layer.conv.weights);
  out.emplace_back(prefix + ".bn.scale", &layer.bn.scale);
  out.emplace_back(prefix + ".bn.shift", &layer.bn.shift);
  out.emplace_back(prefix + ".bn.mean", &layer.bn.mean);
  out.emplace_back(prefix + ".bn.var", &layer.bn.var);
}

void name_linear(std::vector<std::pair<std::string, std::vector<double>*>>& out, const std::string& prefix,
                 LinearParams& lin) {
  out.emplace_back(prefix + ".weight", &lin.weight.data());
  out.emplace_back(prefix + ".bias", &lin.bias);
}

}  // namespace

LayerParams LayerParams::initialize(const NetworkConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return build_params(cfg, &rng);
}

void LayerParams::validate(const NetworkConfig& cfg) const {
  cfg.validate();
  const int c = cfg.channels;
  const int k = cfg.kernel_size;
  if (context.size() != 3 || head.size() != 2) throw ShapeMismatch("context or head layer count is wrong");
  int in = static_cast<int>(kInputChannels);
  const auto widths = cfg.context_widths();
  for (std::size_t i = 0; i < 3; ++i) {
    check_layer(context[i], k, in, widths[i]);
    in = widths[i];
  }
  for (int l = 0; l < kExtractionLayers; ++l) {
    const ExtractionParams& layer = extraction[static_cast<std::size_t>(l)];
    if ((l > 0) != layer.downsample.has_value()) throw ShapeMismatch("downsampling block placement is wrong");
    if (layer.downsample) {
      check_layer(layer.downsample->strided, k, c, c);
      check_layer(layer.downsample->second, k, c, c);
    }
    if (layer.blocks.size() != static_cast<std::size_t>(cfg.extraction_blocks[static_cast<std::size_t>(l)])) {
      throw ShapeMismatch("extraction block count differs from the configuration");
    }
    for (const SfcBlockParams& b : layer.blocks) {
      check_layer(b.first, k, c, c);
      check_layer(b.second, k, c, c);
    }
  }
  for (int l = 0; l < kUpsampledLayers; ++l) {
    check_layer(upsample[static_cast<std::size_t>(l)], cfg.upsample_kernel(l + 2), c, c);
  }
  check_layer(head[0], k, cfg.head_input(), 2 * c);
  check_layer(head[1], k, 2 * c, c);
  check_linear(classifier, c, cfg.classes);
  for (const LinearParams& aux : auxiliary) check_linear(aux, c, cfg.classes);
}

std::vector<std::pair<std::string, std::vector<double>*>> named_tensors(LayerParams& params) {
  std::vector<std::pair<std::string, std::vector<double>*>> out;
  for (std::size_t i = 0; i < params.context.size(); ++i) {
    name_layer(out, "context." + std::to_string(i), params.context[i]);
  }
  for (std::size_t l = 0; l < params.extraction.size(); ++l) {
    ExtractionParams& layer = params.extraction[l];
    const std::string prefix = "extraction" + std::to_string(l + 1);
    if (layer.downsample) {
      name_layer(out, prefix + ".down.strided", layer.downsample->strided);
      name_layer(out, prefix + ".down.second", layer.downsample->second);
    }
    for (std::size_t b = 0; b < layer.blocks.size(); ++b) {
      name_layer(out, prefix + ".block" + std::to_string(b) + ".first", layer.blocks[b].first);
      name_layer(out, prefix + ".block" + std::to_string(b) + ".second", layer.blocks[b].second);
    }
  }
  for (std::size_t l = 0; l < params.upsample.size(); ++l) {
    name_layer(out, "upsample" + std::to_string(l + 2), params.upsample[l]);
  }
  for (std::size_t i = 0; i < params.head.size(); ++i) name_layer(out, "head." + std::to_string(i), params.head[i]);
  name_linear(out, "classifier", params.classifier);
  for (std::size_t l = 0; l < params.auxiliary.size(); ++l) {
    name_linear(out, "auxiliary" + std::to_string(l + 1), params.auxiliary[l]);
  }
  return out;
}

void write_weights(const std::filesystem::path& path, LayerParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open weight file for writing: " + path.string());
  const auto tensors = named_tensors(params);
  os << "sfc-weights 1\n";
  for (const auto& [name, data] : tensors) os << "tensor " << name << " " << data->size() << "\n";
  os << "end\n";
  for (const auto& [name, data] : tensors) binary::write_floats(os, *data);
  if (!os) throw IoError("failed writing weight file: " + path.string());
}

LayerParams read_weights(const std::filesystem::path& path, const NetworkConfig& cfg) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open weight file: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "sfc-weights 1") throw IoError("not a weight file: " + path.string());
  std::vector<std::pair<std::string, std::size_t>> manifest;
  while (std::getline(is, line) && line != "end") {
    std::istringstream fields(line);
    std::string tag;
    std::string name;
    std::size_t count = 0;
    if (!(fields >> tag >> name >> count) || tag != "tensor") throw IoError("malformed weight manifest: " + line);
    manifest.emplace_back(name, count);
  }
  if (line != "end") throw IoError("weight manifest not terminated");

  std::map<std::string, std::vector<double>> blobs;
  for (const auto& [name, count] : manifest) blobs[name] = binary::read_floats(is, count);

  LayerParams params = build_params(cfg, nullptr);
  for (auto& [name, data] : named_tensors(params)) {
    const auto it = blobs.find(name);
    if (it == blobs.end()) throw ShapeMismatch("weight file lacks tensor " + name);
    if (it->second.size() != data->size()) throw ShapeMismatch("tensor " + name + " has the wrong size");
    *data = std::move(it->second);
  }
  params.validate(cfg);
  return params;
}

double hardswish(double x) {
  if (x <= -3.0) return 0.0;
  if (x >= 3.0) return x;
  return x * (x + 3.0) / 6.0;
}

Matrix hardswish(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data()) v = hardswish(v);
  return out;
}

Matrix bn_inference(const Matrix& x, const BatchNorm& bn, double eps) {
  const std::size_t c = x.cols();
  if (bn.scale.size() != c || bn.shift.size() != c || bn.mean.size() != c || bn.var.size() != c) {
    throw ShapeMismatch("batch norm width differs from the input channels");
  }
  std::vector<double> gain(c);
  for (std::size_t j = 0; j < c; ++j) gain[j] = bn.scale[j] / std::sqrt(bn.var[j] + eps);
  Matrix out(x.rows(), c);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < c; ++j) out(r, j) = gain[j] * (x(r, j) - bn.mean[j]) + bn.shift[j];
  }
  return out;
}

Matrix linear_forward(const Matrix& x, const LinearParams& linear) {
  if (x.cols() != linear.weight.cols()) throw ShapeMismatch("linear input width differs from its weights");
  Matrix out(x.rows(), linear.weight.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    for (std::size_t o = 0; o < linear.weight.rows(); ++o) {
      double acc = linear.bias[o];
      const auto w = linear.weight.row(o);
      for (std::size_t i = 0; i < in.size(); ++i) acc += w[i] * in[i];
      out(r, o) = acc;
    }
  }
  return out;
}

ScaleState ScaleState::from_projection(std::vector<Vec3> xyz, std::span<const ProjectedPoint> projected,
                                       int height, int width, Matrix features) {
  ScaleState s;
  s.xyz = std::move(xyz);
  s.grid = FrustumGrid::build(projected, height, width);
  s.index = HashIndex::build(s.grid);
  s.features = std::move(features);
  return s;
}

Matrix sfc_layer_forward(const Matrix& features, const GatherPlan& plan, const SfcLayerParams& layer, double eps) {
  return hardswish(bn_inference(sfc_forward(features, plan, layer.conv), layer.bn, eps));
}

Matrix sfc_block_forward(const Matrix& features, const GatherPlan& plan, const SfcBlockParams& block, double eps) {
  Matrix out = sfc_layer_forward(sfc_layer_forward(features, plan, block.first, eps), plan, block.second, eps);
  if (out.rows() != features.rows() || out.cols() != features.cols()) {
    throw ShapeMismatch("residual shortcut needs equal input and output shapes");
  }
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += features.data()[i];
  return out;
}

ScaleState downsample_block_forward(const ScaleState& parent, const DownsampleBlockParams& block,
                                    const NetworkConfig& cfg) {
  const SampledCloud sampled = f2ps(parent.grid, parent.index, parent.xyz, cfg.strides);
  const GatherPlan strided_plan =
      gather_neighbors(sampled.parent_indices, parent.grid, parent.index, cfg.kernel_size, cfg.wrap_azimuth);
  const Matrix hidden = sfc_layer_forward(parent.features, strided_plan, block.strided, cfg.bn_eps);

  ScaleState child;
  child.parent_indices = sampled.parent_indices;
  child.xyz.reserve(sampled.size());
  for (int id : sampled.parent_indices) child.xyz.push_back(parent.xyz[static_cast<std::size_t>(id)]);
  child.grid = rebuild_downsampled_grid(sampled);
  child.index = HashIndex::build(child.grid);

  const GatherPlan plan = gather_neighbors(all_centers(child.grid), child.grid, child.index, cfg.kernel_size,
                                           cfg.wrap_azimuth);
  child.features = sfc_layer_forward(hidden, plan, block.second, cfg.bn_eps);
  const Matrix shortcut = gather_rows(parent.features, sampled.parent_indices);
  if (shortcut.cols() != child.features.cols()) throw ShapeMismatch("downsampling shortcut width mismatch");
  for (std::size_t i = 0; i < shortcut.data().size(); ++i) child.features.data()[i] += shortcut.data()[i];
  return child;
}

ForwardResult sfcnet_forward(const PointCloud& cloud, const LayerParams& params, const NetworkConfig& cfg,
                             const SphericalConfig& projection, const NormStats& stats) {
  if (cloud.size() == 0) throw EmptyCloud();
  params.validate(cfg);
  if (cloud.features.rows() != cloud.size() || cloud.features.cols() != kInputChannels) {
    throw ShapeMismatch("cloud features must be N x 5");
  }
  const double eps = cfg.bn_eps;
  const auto projected = project_cloud(cloud.xyz, projection);
  ScaleState input = ScaleState::from_projection(cloud.xyz, projected, projection.height, projection.width,
                                                 normalize_features(cloud.features, stats));
  const std::vector<CenterQuery> centers = all_centers(input.grid);
  const GatherPlan plan =
      gather_neighbors(centers, input.grid, input.index, cfg.kernel_size, cfg.wrap_azimuth);

  Matrix context = input.features;
  for (const SfcLayerParams& layer : params.context) context = sfc_layer_forward(context, plan, layer, eps);

  ForwardResult result;
  std::array<ScaleState, kExtractionLayers> scales;
  scales[0].xyz = input.xyz;
  scales[0].grid = input.grid;
  scales[0].index = input.index;
  scales[0].features = context;
  for (int l = 0; l < kExtractionLayers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const ExtractionParams& layer = params.extraction[li];
    if (l > 0) scales[li] = downsample_block_forward(scales[li - 1], *layer.downsample, cfg);
    ScaleState& scale = scales[li];
    const GatherPlan scale_plan =
        l == 0 ? plan
               : gather_neighbors(all_centers(scale.grid), scale.grid, scale.index, cfg.kernel_size,
                                  cfg.wrap_azimuth);
    for (const SfcBlockParams& block : layer.blocks) {
      scale.features = sfc_block_forward(scale.features, scale_plan, block, eps);
    }
    result.scale_sizes[li] = scale.size();
  }

  std::array<Matrix, kExtractionLayers> decoded;
  decoded[0] = scales[0].features;
  for (int l = 1; l < kExtractionLayers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const SfcLayerParams& up = params.upsample[li - 1];
    const GatherPlan up_plan =
        gather_upsampled(centers, scales[li].grid, scales[li].index, cfg.layer_rate(l + 1), up.conv.size,
                         cfg.wrap_azimuth, projection.height, projection.width);
    decoded[li] = sfc_layer_forward(scales[li].features, up_plan, up, eps);
  }

  const std::array<const Matrix*, 5> parts{&context, &decoded[0], &decoded[1], &decoded[2], &decoded[3]};
  Matrix head = concat_cols(parts);
  for (const SfcLayerParams& layer : params.head) head = sfc_layer_forward(head, plan, layer, eps);
  result.logits = linear_forward(head, params.classifier);
  for (std::size_t l = 0; l < decoded.size(); ++l) {
    result.auxiliary_logits[l] = linear_forward(decoded[l], params.auxiliary[l]);
  }
  return result;
}

std::vector<std::uint32_t> argmax_rows(const Matrix& logits) {
  std::vector<std::uint32_t> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace sfc
