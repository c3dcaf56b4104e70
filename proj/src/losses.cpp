#include "sfc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace sfc {

LossConfig::LossConfig(std::vector<double> frequencies, double epsilon, LovaszClasses lovasz)
    : frequencies_(std::move(frequencies)), epsilon_(epsilon), lovasz_(lovasz) {
  if (frequencies_.empty()) throw ConfigError("class frequencies are empty");
  if (!(epsilon_ > 0.0)) throw ConfigError("loss epsilon must be positive");
  double total = 0.0;
  for (double f : frequencies_) {
    if (!(f >= 0.0)) throw ConfigError("class frequencies must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ConfigError("class frequencies must sum to 1");
  weights_.reserve(frequencies_.size());
  for (double f : frequencies_) weights_.push_back(1.0 / (f + epsilon_));
}

LossConfig LossConfig::uniform(int classes) {
  return LossConfig(std::vector<double>(static_cast<std::size_t>(classes), 1.0 / classes));
}

LossConfig read_class_frequencies(const std::filesystem::path& path, double epsilon) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open class frequency file: " + path.string());
  std::map<long, double> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    long id = 0;
    double freq = 0.0;
    if (!(fields >> id >> freq)) throw ConfigError("malformed class frequency line: " + line);
    if (id < 0 || !entries.emplace(id, freq).second) throw ConfigError("bad or repeated class id: " + line);
  }
  std::vector<double> freqs;
  for (const auto& [id, f] : entries) {
    if (id != static_cast<long>(freqs.size())) throw ConfigError("class ids must be contiguous from 0");
    freqs.push_back(f);
  }
  return LossConfig(std::move(freqs), epsilon);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) total += (out(r, c) = std::exp(in[c] - peak));
    for (std::size_t c = 0; c < in.size(); ++c) out(r, c) /= total;
  }
  return out;
}

namespace {

void check_labels(std::size_t rows, std::size_t classes, std::span<const std::uint32_t> labels) {
  if (labels.size() != rows) throw ShapeMismatch("label count differs from prediction rows");
  for (std::uint32_t y : labels) {
    if (y >= classes) throw BadLabel("label " + std::to_string(y) + " outside [0, classes)");
  }
}

// Gradient of the Lovasz extension of the Jaccard loss at a foreground mask
// sorted by decreasing error.
std::vector<double> lovasz_grad(const std::vector<double>& sorted_fg) {
  const double gts = std::accumulate(sorted_fg.begin(), sorted_fg.end(), 0.0);
  std::vector<double> jaccard(sorted_fg.size());
  double cum_fg = 0.0;
  double cum_bg = 0.0;
  for (std::size_t i = 0; i < sorted_fg.size(); ++i) {
    cum_fg += sorted_fg[i];
    cum_bg += 1.0 - sorted_fg[i];
    const double intersection = gts - cum_fg;
    const double uni = gts + cum_bg;
    jaccard[i] = 1.0 - intersection / uni;
  }
  for (std::size_t i = jaccard.size(); i-- > 1;) jaccard[i] -= jaccard[i - 1];
  return jaccard;
}

}  // namespace

double weighted_cross_entropy(const Matrix& logits, std::span<const std::uint32_t> labels, const LossConfig& cfg) {
  if (logits.rows() == 0) throw ShapeMismatch("weighted cross-entropy needs at least one point");
  if (logits.cols() != cfg.classes()) throw ShapeMismatch("logit width differs from class count");
  check_labels(logits.rows(), logits.cols(), labels);
  // Weighted mean taken relative to the first term, so equal terms come back exactly.
  double reference = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double z : row) total += std::exp(z - peak);
    const double nll = std::log(total) - (row[labels[r]] - peak);
    const double w = cfg.weights()[labels[r]];
    if (r == 0) reference = nll;
    numerator += w * (nll - reference);
    denominator += w;
  }
  return reference + numerator / denominator;
}

double lovasz_softmax(const Matrix& probs, std::span<const std::uint32_t> labels, LovaszClasses classes) {
  check_labels(probs.rows(), probs.cols(), labels);
  const std::size_t n = probs.rows();
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<std::size_t> order(n);
  std::vector<double> errors(n);
  std::vector<double> sorted_fg(n);
  for (std::size_t c = 0; c < probs.cols(); ++c) {
    bool present = false;
    for (std::size_t k = 0; k < n; ++k) {
      const double fg = labels[k] == c ? 1.0 : 0.0;
      present = present || fg > 0.0;
      errors[k] = std::abs(fg - probs(k, c));
    }
    if (!present && classes == LovaszClasses::kPresent) continue;
    ++counted;
    if (n == 0) continue;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return errors[a] > errors[b]; });
    for (std::size_t i = 0; i < n; ++i) sorted_fg[i] = labels[order[i]] == c ? 1.0 : 0.0;
    const auto grad = lovasz_grad(sorted_fg);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) loss += errors[order[i]] * grad[i];
    total += loss;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

double multi_layer_loss(std::span<const Matrix> layer_logits, std::span<const std::uint32_t> labels,
                        const LossConfig& cfg) {
  double total = 0.0;
  for (const Matrix& logits : layer_logits) {
    if (logits.rows() != labels.size()) throw ShapeMismatch("layer logits differ in row count from labels");
    total += weighted_cross_entropy(logits, labels, cfg) +
             lovasz_softmax(softmax_rows(logits), labels, cfg.lovasz_classes());
  }
  return total;
}

}  // namespace sfc
