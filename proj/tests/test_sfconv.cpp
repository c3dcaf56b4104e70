#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sfc/sfconv.hpp"

namespace sfc {
namespace {

struct Built {
  FrustumGrid grid;
  HashIndex index;
};

Built build(const test::Scene& s) {
  Built b{FrustumGrid::build(s.projected, s.height, s.width), {}};
  b.index = HashIndex::build(b.grid);
  return b;
}

ConvKernel random_kernel(std::mt19937_64& rng, int k, int in, int out, bool bias) {
  auto kernel = ConvKernel::zeros(k, in, out, bias);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (double& w : kernel.weights) w = d(rng);
  if (kernel.bias)
    for (double& b : *kernel.bias) b = d(rng);
  return kernel;
}

std::vector<int> iota_ids(std::size_t n) {
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  return ids;
}

TEST(GatherNeighbors, UnitKernelPicksOwnFrustum) {
  const test::Scene s{4, 4, {{1, 1, 1.0}, {2, 2, 1.0}, {2, 2, 3.0}}, {}};
  const auto b = build(s);
  const auto plan = gather_neighbors(iota_ids(3), b.grid, b.index, 1, true);
  for (int c = 0; c < 3; ++c) {
    ASSERT_EQ(plan.valid_count(static_cast<std::size_t>(c)), 1);
    EXPECT_EQ(plan.entries(static_cast<std::size_t>(c))[0].source, c);
  }
}

TEST(GatherNeighbors, IsolatedPointGathersOnlyItself) {
  const test::Scene s{8, 16, {{5, 4, 1.0}, {10, 4, 1.0}}, {}};
  const auto b = build(s);
  const auto plan = gather_neighbors(iota_ids(2), b.grid, b.index, 3, true);
  EXPECT_EQ(plan.valid_count(0), 1);
  EXPECT_EQ(plan.entries(0)[0], (GatherEntry{4, 0}));
}

TEST(GatherNeighbors, EqualGapPrefersSmallerM) {
  // Ranges 1 and 3 are equally far from the center's range 2.
  const test::Scene s{4, 4, {{1, 1, 2.0}, {2, 1, 3.0}, {2, 1, 1.0}}, {}};
  const auto b = build(s);
  const auto plan = gather_neighbors(std::vector<int>{0}, b.grid, b.index, 3, false);
  ASSERT_EQ(plan.valid_count(0), 2);
  EXPECT_EQ(plan.entries(0)[1], (GatherEntry{kernel_offset(1, 0, 3), 1}));
}

TEST(GatherNeighbors, AzimuthWrapIsConfigurable) {
  const test::Scene s{4, 8, {{0, 1, 1.0}, {7, 1, 1.0}}, {}};
  const auto b = build(s);
  EXPECT_EQ(gather_neighbors(std::vector<int>{0}, b.grid, b.index, 3, true).valid_count(0), 2);
  EXPECT_EQ(gather_neighbors(std::vector<int>{0}, b.grid, b.index, 3, false).valid_count(0), 1);
}

TEST(GatherNeighbors, MatchesWindowOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = test::random_scene(rng, 200);
    const auto b = build(s);
    for (int k : {1, 3, 5}) {
      for (bool wrap : {false, true}) {
        const auto plan = gather_neighbors(iota_ids(s.projected.size()), b.grid, b.index, k, wrap);
        ASSERT_EQ(plan.centers(), s.projected.size());
        for (std::size_t c = 0; c < plan.centers(); ++c) {
          const auto expected = test::brute_plan(s, static_cast<int>(c), k, wrap);
          const auto got = plan.entries(c);
          ASSERT_EQ(std::vector<GatherEntry>(got.begin(), got.end()), expected);
          ASSERT_LE(plan.valid_count(c), k * k);
        }
        EXPECT_EQ(gather_neighbors(iota_ids(s.projected.size()), b.grid, b.index, k, wrap), plan);
      }
    }
  }
}

TEST(SfcForward, IdentityKernelCopiesSingletonFeatures) {
  const test::Scene s{4, 4, {{0, 0, 1.0}, {1, 2, 2.0}, {3, 3, 1.5}}, {}};
  const auto b = build(s);
  auto kernel = ConvKernel::zeros(1, 3, 3);
  for (int i = 0; i < 3; ++i) kernel.weight(0, i, i) = 1.0;
  std::mt19937_64 rng(1);
  const Matrix f = test::random_matrix(rng, 3, 3);
  EXPECT_EQ(sfc_forward(f, gather_neighbors(iota_ids(3), b.grid, b.index, 1, true), kernel), f);
}

TEST(SfcForward, ZeroWeightsGiveZero) {
  std::mt19937_64 rng(2);
  const auto s = test::random_scene(rng, 50);
  const auto b = build(s);
  const Matrix f = test::random_matrix(rng, 50, 4);
  const Matrix out = sfc_forward(f, gather_neighbors(iota_ids(50), b.grid, b.index, 3, true), ConvKernel::zeros(3, 4, 2));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(SfcForward, ChannelMismatchThrows) {
  const test::Scene s{4, 4, {{0, 0, 1.0}}, {}};
  const auto b = build(s);
  const auto plan = gather_neighbors(iota_ids(1), b.grid, b.index, 1, true);
  EXPECT_THROW(sfc_forward(Matrix(1, 3), plan, ConvKernel::zeros(1, 4, 2)), ShapeMismatch);
}

TEST(ConvKernel, RejectsEvenSize) {
  auto k = ConvKernel::zeros(3, 2, 2);
  k.size = 2;
  EXPECT_THROW(k.validate(), ShapeMismatch);
  EXPECT_THROW(ConvKernel::zeros(3, 2, 2).weights.at(36), std::out_of_range);
}

TEST(SfcForward, MatchesDenseConvolutionOracle) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 12; ++trial) {
    const auto s = test::random_scene(rng, 120);
    const auto b = build(s);
    for (int k : {1, 3}) {
      for (bool wrap : {false, true}) {
        const auto kernel = random_kernel(rng, k, 3, 2, trial % 2 == 0);
        const Matrix f = test::random_matrix(rng, s.projected.size(), 3);
        const Matrix got = sfc_forward(f, gather_neighbors(iota_ids(s.projected.size()), b.grid, b.index, k, wrap), kernel);
        const Matrix want = test::dense_conv(s, f, kernel, wrap);
        for (std::size_t i = 0; i < got.data().size(); ++i) ASSERT_NEAR(got.data()[i], want.data()[i], 1e-6);
      }
    }
  }
}

TEST(SfcForward, IsLinearInFeatures) {
  std::mt19937_64 rng(43);
  const auto s = test::random_scene(rng, 150);
  const auto b = build(s);
  const auto plan = gather_neighbors(iota_ids(150), b.grid, b.index, 3, true);
  const auto kernel = random_kernel(rng, 3, 4, 3, false);
  const Matrix f = test::random_matrix(rng, 150, 4);
  const Matrix g = test::random_matrix(rng, 150, 4);
  Matrix mix(150, 4);
  for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = 2.5 * f.data()[i] - 0.75 * g.data()[i];
  const Matrix a = sfc_forward(f, plan, kernel), c = sfc_forward(g, plan, kernel), m = sfc_forward(mix, plan, kernel);
  for (std::size_t i = 0; i < m.data().size(); ++i) EXPECT_NEAR(m.data()[i], 2.5 * a.data()[i] - 0.75 * c.data()[i], 1e-6);
}

TEST(SfcForward, PerturbingDistantPointLeavesOutputs) {
  // Two clusters more than a kernel width apart; changing the second cluster's
  // features must not touch the first cluster's outputs.
  const test::Scene s{8, 16, {{1, 1, 1.0}, {2, 1, 2.0}, {1, 2, 1.0}, {10, 5, 1.0}, {11, 5, 3.0}}, {}};
  const auto b = build(s);
  const auto plan = gather_neighbors(iota_ids(5), b.grid, b.index, 3, false);
  std::mt19937_64 rng(44);
  const auto kernel = random_kernel(rng, 3, 2, 2, true);
  Matrix f = test::random_matrix(rng, 5, 2);
  const Matrix before = sfc_forward(f, plan, kernel);
  f(3, 0) += 10.0;
  f(4, 1) -= 3.0;
  const Matrix after = sfc_forward(f, plan, kernel);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t o = 0; o < 2; ++o) EXPECT_EQ(after(c, o), before(c, o));
}

TEST(SfcBackward, ZeroGradientGivesZero) {
  std::mt19937_64 rng(45);
  const auto s = test::random_scene(rng, 60);
  const auto b = build(s);
  const auto plan = gather_neighbors(iota_ids(60), b.grid, b.index, 3, true);
  const auto g = sfc_backward(Matrix(60, 2), plan, random_kernel(rng, 3, 3, 2, true), test::random_matrix(rng, 60, 3));
  for (double v : g.features.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.weights) EXPECT_EQ(v, 0.0);
  for (double v : g.bias) EXPECT_EQ(v, 0.0);
}

TEST(SfcBackward, IdentityAdjointScattersGradient) {
  const test::Scene s{4, 4, {{0, 0, 1.0}, {1, 2, 2.0}}, {}};
  const auto b = build(s);
  auto kernel = ConvKernel::zeros(1, 2, 2);
  kernel.weight(0, 0, 0) = kernel.weight(0, 1, 1) = 1.0;
  const Matrix go(2, 2, {1, 2, 3, 4});
  const auto g = sfc_backward(go, gather_neighbors(iota_ids(2), b.grid, b.index, 1, true), kernel, Matrix(2, 2));
  EXPECT_EQ(g.features, go);
}

TEST(SfcBackward, AdjointIdentityHolds) {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = test::random_scene(rng, 150);
    const auto b = build(s);
    const auto plan = gather_neighbors(iota_ids(150), b.grid, b.index, 3, trial % 2 == 0);
    const auto kernel = random_kernel(rng, 3, 3, 4, false);
    const Matrix f = test::random_matrix(rng, 150, 3);
    const Matrix g = test::random_matrix(rng, 150, 4);
    const Matrix y = sfc_forward(f, plan, kernel);
    const auto grads = sfc_backward(g, plan, kernel, f);
    double lhs = 0.0, rhs = 0.0, rhs_w = 0.0;
    for (std::size_t i = 0; i < y.data().size(); ++i) lhs += y.data()[i] * g.data()[i];
    for (std::size_t i = 0; i < f.data().size(); ++i) rhs += f.data()[i] * grads.features.data()[i];
    for (std::size_t i = 0; i < kernel.weights.size(); ++i) rhs_w += kernel.weights[i] * grads.weights[i];
    EXPECT_NEAR(lhs, rhs, 1e-6);
    EXPECT_NEAR(lhs, rhs_w, 1e-6);
  }
}

TEST(SfcBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(47);
  const auto s = test::random_scene(rng, 40);
  const auto b = build(s);
  const auto plan = gather_neighbors(iota_ids(40), b.grid, b.index, 3, true);
  auto kernel = random_kernel(rng, 3, 2, 2, true);
  Matrix f = test::random_matrix(rng, 40, 2);
  const Matrix g = test::random_matrix(rng, 40, 2);
  auto objective = [&] {
    const Matrix y = sfc_forward(f, plan, kernel);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.data().size(); ++i) acc += y.data()[i] * g.data()[i];
    return acc;
  };
  const auto grads = sfc_backward(g, plan, kernel, f);
  const double step = 1e-4;
  for (std::size_t i = 0; i < f.data().size(); ++i) {
    const double keep = f.data()[i];
    f.data()[i] = keep + step;
    const double up = objective();
    f.data()[i] = keep - step;
    const double down = objective();
    f.data()[i] = keep;
    EXPECT_NEAR((up - down) / (2 * step), grads.features.data()[i], 1e-6);
  }
  for (std::size_t i = 0; i < kernel.bias->size(); ++i) {
    const double keep = (*kernel.bias)[i];
    (*kernel.bias)[i] = keep + step;
    const double up = objective();
    (*kernel.bias)[i] = keep - step;
    const double down = objective();
    (*kernel.bias)[i] = keep;
    EXPECT_NEAR((up - down) / (2 * step), grads.bias[i], 1e-6);
  }
}

TEST(UpsampleSfc, UnitRateMatchesPlainForward) {
  std::mt19937_64 rng(51);
  const auto s = test::random_scene(rng, 150);
  const auto b = build(s);
  const auto kernel = random_kernel(rng, 3, 3, 2, true);
  const Matrix f = test::random_matrix(rng, 150, 3);
  const auto centers = all_centers(b.grid);
  EXPECT_EQ(upsample_sfc_forward(f, b.grid, b.index, centers, {1, 1}, kernel, true, s.height, s.width),
            sfc_forward(f, gather_neighbors(iota_ids(150), b.grid, b.index, 3, true), kernel));
}

TEST(UpsampleSfc, EmptyWindowGivesBias) {
  const test::Scene coarse{4, 8, {{0, 0, 1.0}}, {}};
  const auto b = build(coarse);
  auto kernel = ConvKernel::zeros(3, 1, 2, true);
  std::fill(kernel.weights.begin(), kernel.weights.end(), 1.0);
  *kernel.bias = {0.5, -0.5};
  const std::vector<CenterQuery> centers{{9, 5, 1.0}};
  const Matrix out = upsample_sfc_forward(Matrix(1, 1, 7.0), b.grid, b.index, centers, {2, 2}, kernel, true, 8, 16);
  EXPECT_EQ(out, Matrix(1, 2, {0.5, -0.5}));
}

TEST(UpsampleSfc, MatchesScaledWindowOracle) {
  std::mt19937_64 rng(52);
  const std::vector<std::pair<int, int>> rates{{2, 3}, {4, 7}, {8, 15}};
  for (int trial = 0; trial < 6; ++trial) {
    for (const auto& [rate, k] : rates) {
      const int ch = 16 / rate < 2 ? 2 : 16 / rate;
      const auto coarse = test::random_scene(rng, 80, std::max(1, 8 / rate), ch);
      const int fine_h = coarse.height * rate;
      const int fine_w = coarse.width * rate;
      const auto b = build(coarse);
      std::vector<CenterQuery> centers;
      std::uniform_int_distribution<int> fu(0, fine_w - 1), fv(0, fine_h - 1), lvl(1, 6);
      for (int i = 0; i < 60; ++i) centers.push_back({fu(rng), fv(rng), 0.5 * lvl(rng)});
      for (bool wrap : {false, true}) {
        const auto plan = gather_upsampled(centers, b.grid, b.index, {rate, rate}, k, wrap, fine_h, fine_w);
        for (std::size_t c = 0; c < centers.size(); ++c) {
          const auto got = plan.entries(c);
          ASSERT_EQ(std::vector<GatherEntry>(got.begin(), got.end()),
                    test::brute_upsampled(coarse, centers[c], rate, rate, k, wrap, fine_h, fine_w));
        }
      }
    }
  }
}

TEST(KernelFile, RoundTripsAtFloatPrecision) {
  std::mt19937_64 rng(61);
  const auto kernel = random_kernel(rng, 3, 4, 5, true);
  const auto path = std::filesystem::temp_directory_path() / "sfc_kernel_roundtrip.bin";
  write_kernel(path, kernel);
  const auto back = read_kernel(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.size, 3);
  EXPECT_EQ(back.in_channels, 4);
  EXPECT_EQ(back.out_channels, 5);
  ASSERT_EQ(back.weights.size(), kernel.weights.size());
  for (std::size_t i = 0; i < kernel.weights.size(); ++i)
    EXPECT_EQ(back.weights[i], static_cast<double>(static_cast<float>(kernel.weights[i])));
  ASSERT_TRUE(back.bias);
  EXPECT_EQ(back.bias->size(), 5u);
}

TEST(KernelFile, TruncatedFileIsRejected) {
  const auto path = std::filesystem::temp_directory_path() / "sfc_kernel_truncated.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "sfc-kernel 1\nkernel_size 3\nout_channels 2\nin_channels 2\nbias 0\nend\n" << "abc";
  }
  EXPECT_THROW(read_kernel(path), Error);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace sfc
