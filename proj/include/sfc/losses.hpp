#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sfc/matrix.hpp"

namespace sfc {

enum class LovaszClasses { kPresent, kAll };

// Class weights w_c = 1 / (f_c + eps).
class LossConfig {
 public:
  // Throws ConfigError unless frequencies are non-negative and sum to 1 within 1e-6.
  explicit LossConfig(std::vector<double> frequencies, double epsilon = 1e-3,
                      LovaszClasses lovasz = LovaszClasses::kPresent);
  // Equal weights for `classes` classes.
  static LossConfig uniform(int classes);

  const std::vector<double>& frequencies() const { return frequencies_; }
  const std::vector<double>& weights() const { return weights_; }
  double epsilon() const { return epsilon_; }
  LovaszClasses lovasz_classes() const { return lovasz_; }
  std::size_t classes() const { return weights_.size(); }

 private:
  std::vector<double> frequencies_;
  std::vector<double> weights_;
  double epsilon_;
  LovaszClasses lovasz_;
};

// "class_id frequency" per line; ids must cover 0..n-1 exactly once.
LossConfig read_class_frequencies(const std::filesystem::path& path, double epsilon = 1e-3);

Matrix softmax_rows(const Matrix& logits);

// sum_k w[y_k] * -log softmax(logits_k)[y_k] / sum_k w[y_k]. Throws BadLabel.
double weighted_cross_entropy(const Matrix& logits, std::span<const std::uint32_t> labels, const LossConfig& cfg);

// Lovasz extension of the per-class Jaccard loss, averaged over classes.
double lovasz_softmax(const Matrix& probs, std::span<const std::uint32_t> labels,
                      LovaszClasses classes = LovaszClasses::kPresent);

// Sum over the layers of weighted cross-entropy plus Lovasz-Softmax of the softmax.
double multi_layer_loss(std::span<const Matrix> layer_logits, std::span<const std::uint32_t> labels,
                        const LossConfig& cfg);

}  // namespace sfc
