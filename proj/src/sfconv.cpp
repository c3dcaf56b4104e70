#include "sfc/sfconv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "sfc/binary.hpp"

namespace sfc {

ConvKernel ConvKernel::zeros(int size, int in_channels, int out_channels, bool with_bias) {
  ConvKernel k;
  k.size = size;
  k.in_channels = in_channels;
  k.out_channels = out_channels;
  k.weights.assign(static_cast<std::size_t>(size) * size * in_channels * out_channels, 0.0);
  if (with_bias) k.bias = std::vector<double>(static_cast<std::size_t>(out_channels), 0.0);
  k.validate();
  return k;
}

void ConvKernel::validate() const {
  if (size < 1 || size % 2 == 0) throw ShapeMismatch("kernel size must be odd and positive");
  if (in_channels < 1 || out_channels < 1) throw ShapeMismatch("kernel channels must be positive");
  if (weights.size() != static_cast<std::size_t>(size) * size * in_channels * out_channels) {
    throw ShapeMismatch("kernel weight buffer does not match its shape");
  }
  if (bias && bias->size() != static_cast<std::size_t>(out_channels)) {
    throw ShapeMismatch("kernel bias length differs from output channels");
  }
}

std::vector<CenterQuery> centers_of(const FrustumGrid& grid, std::span<const int> ids) {
  std::vector<CenterQuery> out;
  out.reserve(ids.size());
  for (int id : ids) {
    const auto k = static_cast<std::size_t>(id);
    out.push_back({grid.u(k), grid.v(k), grid.range(k)});
  }
  return out;
}

std::vector<CenterQuery> all_centers(const FrustumGrid& grid) {
  std::vector<CenterQuery> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = {grid.u(k), grid.v(k), grid.range(k)};
  return out;
}

namespace {

// Point of frustum (u, v) with range closest to `range`; the first (smallest
// m) wins ties. -1 when the frustum is empty.
int nearest_in_frustum(const FrustumGrid& grid, const HashIndex& index, int u, int v, double range) {
  auto current = index.query(u, v, 0);
  if (!current) return -1;
  int best = *current;
  double best_gap = std::abs(grid.range(static_cast<std::size_t>(best)) - range);
  std::size_t steps = 1;
  int m = 0;
  while (grid.indicator(static_cast<std::size_t>(*current)) != 0) {
    if (++steps > grid.size()) throw CorruptIndicator("frustum walk exceeded the cloud size");
    current = index.query(u, v, ++m);
    if (!current) throw CorruptIndicator("indicator points past the end of a frustum");
    const double gap = std::abs(grid.range(static_cast<std::size_t>(*current)) - range);
    if (gap < best_gap) {
      best_gap = gap;
      best = *current;
    }
  }
  return best;
}

int wrap(int value, int period) {
  const int r = value % period;
  return r < 0 ? r + period : r;
}

}  // namespace

GatherPlan gather_upsampled(std::span<const CenterQuery> fine_centers, const FrustumGrid& coarse_grid,
                            const HashIndex& coarse_index, UpsampleRate rate, int kernel_size,
                            bool wrap_azimuth, int fine_height, int fine_width) {
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ShapeMismatch("kernel size must be odd and positive");
  if (rate.rows < 1 || rate.cols < 1) throw ShapeMismatch("upsampling rate must be positive");
  const int half = kernel_size / 2;
  GatherPlan plan;
  for (const CenterQuery& c : fine_centers) {
    for (int dv = -half; dv <= half; ++dv) {
      const int fv = c.v + dv;
      if (fv < 0 || fv >= fine_height || fv % rate.rows != 0) continue;
      for (int du = -half; du <= half; ++du) {
        int fu = c.u + du;
        if (wrap_azimuth) {
          fu = wrap(fu, fine_width);
        } else if (fu < 0 || fu >= fine_width) {
          continue;
        }
        if (fu % rate.cols != 0) continue;
        const int source = nearest_in_frustum(coarse_grid, coarse_index, fu / rate.cols, fv / rate.rows, c.range);
        if (source >= 0) plan.add(kernel_offset(du, dv, kernel_size), source);
      }
    }
    plan.finish_center();
  }
  return plan;
}

GatherPlan gather_neighbors(std::span<const CenterQuery> centers, const FrustumGrid& grid,
                            const HashIndex& index, int kernel_size, bool wrap_azimuth) {
  return gather_upsampled(centers, grid, index, UpsampleRate{1, 1}, kernel_size, wrap_azimuth, grid.height(),
                          grid.width());
}

GatherPlan gather_neighbors(std::span<const int> center_ids, const FrustumGrid& grid, const HashIndex& index,
                            int kernel_size, bool wrap_azimuth) {
  const auto centers = centers_of(grid, center_ids);
  return gather_neighbors(centers, grid, index, kernel_size, wrap_azimuth);
}

Matrix sfc_forward(const Matrix& features, const GatherPlan& plan, const ConvKernel& kernel) {
  kernel.validate();
  if (features.cols() != static_cast<std::size_t>(kernel.in_channels)) {
    throw ShapeMismatch("feature channels differ from kernel input channels");
  }
  const auto c_out = static_cast<std::size_t>(kernel.out_channels);
  const auto c_in = static_cast<std::size_t>(kernel.in_channels);
  Matrix out(plan.centers(), c_out);
  for (std::size_t c = 0; c < plan.centers(); ++c) {
    auto dst = out.row(c);
    if (kernel.bias) std::copy(kernel.bias->begin(), kernel.bias->end(), dst.begin());
    for (const GatherEntry& e : plan.entries(c)) {
      const auto src = features.row(static_cast<std::size_t>(e.source));
      const double* w = kernel.weights.data() + static_cast<std::size_t>(e.offset) * c_out * c_in;
      for (std::size_t o = 0; o < c_out; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < c_in; ++i) acc += w[o * c_in + i] * src[i];
        dst[o] += acc;
      }
    }
  }
  return out;
}

SfcGradients sfc_backward(const Matrix& grad_out, const GatherPlan& plan, const ConvKernel& kernel,
                          const Matrix& features) {
  kernel.validate();
  const auto c_out = static_cast<std::size_t>(kernel.out_channels);
  const auto c_in = static_cast<std::size_t>(kernel.in_channels);
  if (features.cols() != c_in) throw ShapeMismatch("feature channels differ from kernel input channels");
  if (grad_out.rows() != plan.centers() || grad_out.cols() != c_out) {
    throw ShapeMismatch("output gradient shape differs from the forward output");
  }
  SfcGradients g;
  g.features = Matrix(features.rows(), c_in);
  g.weights.assign(kernel.weights.size(), 0.0);
  g.bias.assign(c_out, 0.0);
  for (std::size_t c = 0; c < plan.centers(); ++c) {
    const auto go = grad_out.row(c);
    for (std::size_t o = 0; o < c_out; ++o) g.bias[o] += go[o];
    for (const GatherEntry& e : plan.entries(c)) {
      const auto j = static_cast<std::size_t>(e.source);
      const auto src = features.row(j);
      auto gf = g.features.row(j);
      const std::size_t base = static_cast<std::size_t>(e.offset) * c_out * c_in;
      for (std::size_t o = 0; o < c_out; ++o) {
        const double* w = kernel.weights.data() + base + o * c_in;
        double* gw = g.weights.data() + base + o * c_in;
        for (std::size_t i = 0; i < c_in; ++i) {
          gf[i] += w[i] * go[o];
          gw[i] += go[o] * src[i];
        }
      }
    }
  }
  if (!kernel.bias) g.bias.clear();
  return g;
}

Matrix upsample_sfc_forward(const Matrix& coarse_features, const FrustumGrid& coarse_grid,
                            const HashIndex& coarse_index, std::span<const CenterQuery> fine_centers,
                            UpsampleRate rate, const ConvKernel& kernel, bool wrap_azimuth, int fine_height,
                            int fine_width) {
  if (coarse_features.rows() != coarse_grid.size()) {
    throw ShapeMismatch("coarse features and coarse grid differ in point count");
  }
  const GatherPlan plan = gather_upsampled(fine_centers, coarse_grid, coarse_index, rate, kernel.size,
                                           wrap_azimuth, fine_height, fine_width);
  return sfc_forward(coarse_features, plan, kernel);
}

void write_kernel(const std::filesystem::path& path, const ConvKernel& kernel) {
  kernel.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open kernel file for writing: " + path.string());
  os << "sfc-kernel 1\n"
     << "kernel_size " << kernel.size << "\n"
     << "out_channels " << kernel.out_channels << "\n"
     << "in_channels " << kernel.in_channels << "\n"
     << "bias " << (kernel.bias ? 1 : 0) << "\n"
     << "end\n";
  binary::write_floats(os, kernel.weights);
  if (kernel.bias) binary::write_floats(os, *kernel.bias);
  if (!os) throw IoError("failed writing kernel file: " + path.string());
}

ConvKernel read_kernel(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open kernel file: " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != "sfc-kernel 1") throw IoError("not a kernel file: " + path.string());
  ConvKernel k;
  int has_bias = 0;
  while (std::getline(is, line) && line != "end") {
    std::istringstream fields(line);
    std::string key;
    long value = 0;
    if (!(fields >> key >> value)) throw IoError("malformed kernel header line: " + line);
    if (key == "kernel_size") k.size = static_cast<int>(value);
    else if (key == "out_channels") k.out_channels = static_cast<int>(value);
    else if (key == "in_channels") k.in_channels = static_cast<int>(value);
    else if (key == "bias") has_bias = static_cast<int>(value);
    else throw IoError("unknown kernel header key: " + key);
  }
  if (line != "end") throw IoError("kernel header not terminated");
  if (k.size < 1 || k.in_channels < 1 || k.out_channels < 1) throw ShapeMismatch("kernel header has bad shape");
  k.weights = binary::read_floats(is, static_cast<std::size_t>(k.size) * k.size * k.in_channels * k.out_channels);
  if (has_bias) k.bias = binary::read_floats(is, static_cast<std::size_t>(k.out_channels));
  k.validate();
  return k;
}

}  // namespace sfc
