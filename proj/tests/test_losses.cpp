#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sfc/losses.hpp"

namespace sfc {
namespace {

Matrix one_hot_logits(const std::vector<std::uint32_t>& labels, std::size_t n, double margin) {
  Matrix m(labels.size(), n, -margin);
  for (std::size_t i = 0; i < labels.size(); ++i) m(i, labels[i]) = margin;
  return m;
}

TEST(LossConfig, WeightsAreInverseFrequency) {
  const LossConfig cfg({0.5, 0.3, 0.2});
  EXPECT_DOUBLE_EQ(cfg.weights()[0], 1.0 / 0.501);
  EXPECT_DOUBLE_EQ(cfg.weights()[2], 1.0 / 0.201);
  EXPECT_THROW(LossConfig({0.5, 0.4}), ConfigError);
  EXPECT_THROW(LossConfig({1.5, -0.5}), ConfigError);
  EXPECT_THROW(LossConfig({0.5, 0.5}, 0.0), ConfigError);
}

TEST(LossConfig, ReadsFrequencyFile) {
  const auto path = std::filesystem::temp_directory_path() / "sfc_freq.txt";
  {
    std::ofstream os(path);
    os << "1 0.25\n0 0.75\n";
  }
  const auto cfg = read_class_frequencies(path);
  std::filesystem::remove(path);
  EXPECT_EQ(cfg.frequencies(), (std::vector<double>{0.75, 0.25}));
}

TEST(WeightedCrossEntropy, UniformLogitsGiveLogN) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {2u, 5u, 19u}) {
    std::vector<double> freq(n);
    double sum = 0;
    for (auto& f : freq) sum += (f = std::uniform_real_distribution<double>(0.01, 1)(rng));
    for (auto& f : freq) f /= sum;
    std::vector<std::uint32_t> labels(30);
    for (auto& l : labels) l = std::uniform_int_distribution<std::uint32_t>(0, static_cast<std::uint32_t>(n - 1))(rng);
    EXPECT_EQ(weighted_cross_entropy(Matrix(30, n, 0.7), labels, LossConfig(freq)), std::log(static_cast<double>(n)));
  }
}

TEST(WeightedCrossEntropy, PerfectPredictionIsZero) {
  const std::vector<std::uint32_t> labels{0, 1, 2, 1};
  EXPECT_LT(weighted_cross_entropy(one_hot_logits(labels, 3, 30), labels, LossConfig::uniform(3)), 1e-9);
}

TEST(WeightedCrossEntropy, HandComputedInstance) {
  const Matrix logits(3, 2, {2.0, -1.0, 0.5, 0.25, -1.0, 3.0});
  const std::vector<std::uint32_t> labels{0, 1, 0};
  const LossConfig cfg({0.7, 0.3}, 0.1);
  const double w0 = 1 / 0.8, w1 = 1 / 0.4;
  const double l0 = -std::log(std::exp(2.0) / (std::exp(2.0) + std::exp(-1.0)));
  const double l1 = -std::log(std::exp(0.25) / (std::exp(0.5) + std::exp(0.25)));
  const double l2 = -std::log(std::exp(-1.0) / (std::exp(-1.0) + std::exp(3.0)));
  EXPECT_NEAR(weighted_cross_entropy(logits, labels, cfg), (w0 * l0 + w1 * l1 + w0 * l2) / (w0 + w1 + w0), 1e-12);
}

TEST(WeightedCrossEntropy, ShiftInvariantAndPermutationInvariant) {
  std::mt19937_64 rng(2);
  Matrix logits = test::random_matrix(rng, 40, 4);
  std::vector<std::uint32_t> labels(40);
  for (auto& l : labels) l = std::uniform_int_distribution<std::uint32_t>(0, 3)(rng);
  const LossConfig cfg({0.1, 0.2, 0.3, 0.4});
  const double base = weighted_cross_entropy(logits, labels, cfg);
  Matrix shifted = logits;
  for (std::size_t r = 0; r < 40; ++r)
    for (double& v : shifted.row(r)) v += 3.0 * static_cast<double>(r);
  EXPECT_NEAR(weighted_cross_entropy(shifted, labels, cfg), base, 1e-12);
  std::vector<int> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::uint32_t> plabels;
  for (int p : perm) plabels.push_back(labels[static_cast<std::size_t>(p)]);
  EXPECT_NEAR(weighted_cross_entropy(gather_rows(logits, perm), plabels, cfg), base, 1e-12);
  EXPECT_GE(base, 0.0);
}

TEST(WeightedCrossEntropy, RejectsBadLabel) {
  const std::vector<std::uint32_t> labels{2};
  EXPECT_THROW(weighted_cross_entropy(Matrix(1, 2), labels, LossConfig::uniform(2)), BadLabel);
}

TEST(LovaszSoftmax, PerfectIsZero) {
  const std::vector<std::uint32_t> labels{0, 2, 1, 2};
  EXPECT_EQ(lovasz_softmax(softmax_rows(one_hot_logits(labels, 3, 1e3)), labels), 0.0);
}

TEST(LovaszSoftmax, SingleWrongPointIsOne) {
  const std::vector<std::uint32_t> labels{0};
  EXPECT_DOUBLE_EQ(lovasz_softmax(Matrix(1, 2, {0.0, 1.0}), labels), 1.0);
}

TEST(LovaszSoftmax, MatchesExtensionOracleOnSmallBinaryInstances) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<std::uint32_t> labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = (mask >> i) & 1u;
      Matrix probs(n, 2);
      for (std::size_t i = 0; i < n; ++i) {
        probs(i, 1) = u(rng);
        probs(i, 0) = 1.0 - probs(i, 1);
      }
      ASSERT_NEAR(lovasz_softmax(probs, labels), test::extension_oracle(probs, labels, true), 1e-9);
      ASSERT_NEAR(lovasz_softmax(probs, labels, LovaszClasses::kAll), test::extension_oracle(probs, labels, false), 1e-9);
    }
  }
}

TEST(LovaszSoftmax, MultiClassOracleAndBounds) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix probs = softmax_rows(test::random_matrix(rng, 12, 4));
    std::vector<std::uint32_t> labels(12);
    for (auto& l : labels) l = std::uniform_int_distribution<std::uint32_t>(0, 2)(rng);
    const double value = lovasz_softmax(probs, labels);
    EXPECT_NEAR(value, test::extension_oracle(probs, labels, true), 1e-9);
    EXPECT_GE(value, 0.0);
    EXPECT_LE(value, 1.0);
  }
}

TEST(LovaszSoftmax, AbsentClassCountsOnlyInAllVariant) {
  const std::vector<std::uint32_t> labels{0, 0};
  const Matrix probs(2, 2, {0.75, 0.25, 0.75, 0.25});
  EXPECT_NEAR(lovasz_softmax(probs, labels), 0.25, 1e-12);
  EXPECT_NEAR(lovasz_softmax(probs, labels, LovaszClasses::kAll), (0.25 + 0.25) / 2, 1e-12);
}

TEST(MultiLayerLoss, PerfectLayersGiveZero) {
  const std::vector<std::uint32_t> labels{0, 1, 1, 2};
  const std::vector<Matrix> layers(4, one_hot_logits(labels, 3, 40));
  EXPECT_LT(multi_layer_loss(layers, labels, LossConfig::uniform(3)), 1e-9);
}

TEST(MultiLayerLoss, SumsIndependentLayerTerms) {
  std::mt19937_64 rng(5);
  std::vector<std::uint32_t> labels(25);
  for (auto& l : labels) l = std::uniform_int_distribution<std::uint32_t>(0, 2)(rng);
  const LossConfig cfg({0.6, 0.3, 0.1});
  const Matrix one = test::random_matrix(rng, 25, 3);
  auto single = [&](const Matrix& m) {
    return weighted_cross_entropy(m, labels, cfg) + lovasz_softmax(softmax_rows(m), labels);
  };
  const std::vector<Matrix> same(4, one);
  EXPECT_NEAR(multi_layer_loss(same, labels, cfg), 4 * single(one), 1e-12);
  const std::vector<Matrix> distinct{one, test::random_matrix(rng, 25, 3), test::random_matrix(rng, 25, 3), one};
  double expected = 0.0;
  for (const auto& m : distinct) expected += single(m);
  EXPECT_NEAR(multi_layer_loss(distinct, labels, cfg), expected, 1e-12);
  const std::vector<Matrix> bad{one, Matrix(24, 3)};
  EXPECT_THROW(multi_layer_loss(bad, labels, cfg), ShapeMismatch);
}

}  // namespace
}  // namespace sfc
