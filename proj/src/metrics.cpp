#include "sfc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace sfc {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint32_t> ignored)
    : classes_(classes), ignored_(std::move(ignored)), counts_(classes * classes, 0) {
  if (classes_ == 0) throw ConfigError("confusion matrix needs at least one class");
}

bool ConfusionMatrix::ignored(std::size_t cls) const {
  return std::find(ignored_.begin(), ignored_.end(), cls) != ignored_.end();
}

void ConfusionMatrix::add(std::uint32_t truth, std::uint32_t predicted) {
  if (truth >= classes_ || predicted >= classes_) throw BadLabel("class id outside the confusion matrix");
  if (ignored(truth)) return;
  ++counts_[truth * classes_ + predicted];
  ++total_;
}

void ConfusionMatrix::add(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted) {
  if (truth.size() != predicted.size()) throw CountMismatch("prediction count differs from ground truth count");
  for (std::size_t k = 0; k < truth.size(); ++k) add(truth[k], predicted[k]);
}

IouResult miou(const ConfusionMatrix& cm) {
  const std::size_t n = cm.classes();
  IouResult result;
  result.per_class.assign(n, std::nullopt);
  double sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t c = 0; c < n; ++c) {
    if (cm.ignored(c)) continue;
    const std::uint64_t tp = cm.count(c, c);
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (std::size_t o = 0; o < n; ++o) {
      if (o == c) continue;
      fp += cm.count(o, c);
      fn += cm.count(c, o);
    }
    const std::uint64_t uni = tp + fp + fn;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    result.per_class[c] = iou;
    sum += iou;
    ++valid;
  }
  result.mean = valid == 0 ? 0.0 : sum / static_cast<double>(valid);
  return result;
}

namespace {

std::int64_t cell_of(const ProjectedPoint& p, int width) { return static_cast<std::int64_t>(p.v) * width + p.u; }

}  // namespace

ProjectionSplit conventional_projection(std::span<const ProjectedPoint> projected, int height, int width) {
  std::unordered_map<std::int64_t, int> best;
  best.reserve(projected.size());
  for (std::size_t k = 0; k < projected.size(); ++k) {
    const ProjectedPoint& p = projected[k];
    if (p.u < 0 || p.u >= width || p.v < 0 || p.v >= height) throw OutOfBounds(k);
    auto [it, inserted] = best.emplace(cell_of(p, width), static_cast<int>(k));
    if (!inserted && p.range < projected[static_cast<std::size_t>(it->second)].range) it->second = static_cast<int>(k);
  }
  ProjectionSplit split;
  std::vector<std::pair<std::int64_t, int>> cells(best.begin(), best.end());
  std::sort(cells.begin(), cells.end());
  split.kept.reserve(cells.size());
  std::vector<char> is_kept(projected.size(), 0);
  for (const auto& [cell, id] : cells) {
    split.kept.push_back(id);
    is_kept[static_cast<std::size_t>(id)] = 1;
  }
  for (std::size_t k = 0; k < projected.size(); ++k) {
    if (!is_kept[k]) split.dropped.push_back(static_cast<int>(k));
  }
  return split;
}

ProjectionSplit conventional_projection(const PointCloud& cloud, const SphericalConfig& config) {
  const auto projected = project_cloud(cloud.xyz, config);
  return conventional_projection(projected, config.height, config.width);
}

std::vector<std::uint32_t> knn_restore(std::span<const int> kept, std::span<const std::uint32_t> kept_predictions,
                                       std::span<const int> dropped, std::span<const ProjectedPoint> projected,
                                       int height, int width, const KnnOptions& options) {
  if (kept.size() != kept_predictions.size()) throw CountMismatch("kept predictions do not cover the kept points");
  if (options.neighbors < 1 || options.window < 1) throw ConfigError("knn needs positive neighbors and window");
  std::vector<std::uint32_t> out(projected.size(), 0);
  std::vector<char> labeled(projected.size(), 0);
  std::unordered_map<std::int64_t, std::size_t> kept_at;
  kept_at.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto id = static_cast<std::size_t>(kept[i]);
    out[id] = kept_predictions[i];
    labeled[id] = 1;
    kept_at[cell_of(projected[id], width)] = i;
  }

  const int half = options.window / 2;
  struct Voter {
    double gap;
    int id;
    std::uint32_t label;
  };
  std::vector<Voter> voters;
  for (int d : dropped) {
    const ProjectedPoint& p = projected[static_cast<std::size_t>(d)];
    voters.clear();
    for (int dv = -half; dv <= half; ++dv) {
      const int v = p.v + dv;
      if (v < 0 || v >= height) continue;
      for (int du = -half; du <= half; ++du) {
        int u = p.u + du;
        if (options.wrap_azimuth) {
          u = ((u % width) + width) % width;
        } else if (u < 0 || u >= width) {
          continue;
        }
        const auto it = kept_at.find(static_cast<std::int64_t>(v) * width + u);
        if (it == kept_at.end()) continue;
        const int id = kept[it->second];
        voters.push_back({std::abs(projected[static_cast<std::size_t>(id)].range - p.range), id,
                          kept_predictions[it->second]});
      }
    }
    // A wrapped window narrower than the image can reach the same cell twice.
    std::sort(voters.begin(), voters.end(), [](const Voter& a, const Voter& b) {
      return a.gap != b.gap ? a.gap < b.gap : a.id < b.id;
    });
    voters.erase(std::unique(voters.begin(), voters.end(), [](const Voter& a, const Voter& b) { return a.id == b.id; }),
                 voters.end());
    if (voters.empty()) {
      const auto own = kept_at.find(cell_of(p, width));
      if (own == kept_at.end()) throw CountMismatch("dropped point has no kept point in its own cell");
      out[static_cast<std::size_t>(d)] = kept_predictions[own->second];
      labeled[static_cast<std::size_t>(d)] = 1;
      continue;
    }
    if (voters.size() > static_cast<std::size_t>(options.neighbors)) voters.resize(static_cast<std::size_t>(options.neighbors));
    // Count votes; among tied labels the one whose first voter is nearest wins.
    std::uint32_t best_label = voters.front().label;
    std::size_t best_votes = 0;
    for (std::size_t i = 0; i < voters.size(); ++i) {
      const std::uint32_t label = voters[i].label;
      bool seen = false;
      for (std::size_t j = 0; j < i; ++j) seen = seen || voters[j].label == label;
      if (seen) continue;
      const auto votes = static_cast<std::size_t>(
          std::count_if(voters.begin(), voters.end(), [&](const Voter& x) { return x.label == label; }));
      if (votes > best_votes) {
        best_votes = votes;
        best_label = label;
      }
    }
    out[static_cast<std::size_t>(d)] = best_label;
    labeled[static_cast<std::size_t>(d)] = 1;
  }
  for (char l : labeled) {
    if (!l) throw CountMismatch("kept and dropped ids do not cover every point");
  }
  return out;
}

DropStats drop_stats(std::span<const ProjectedPoint> projected, int height, int width) {
  const ProjectionSplit split = conventional_projection(projected, height, width);
  DropStats s;
  s.points = projected.size();
  s.preserved = split.kept.size();
  s.fraction = s.points == 0 ? 1.0 : static_cast<double>(s.preserved) / static_cast<double>(s.points);
  return s;
}

DropStats drop_stats(const PointCloud& cloud, const SphericalConfig& config) {
  const auto projected = project_cloud(cloud.xyz, config);
  return drop_stats(projected, config.height, config.width);
}

std::map<std::uint32_t, ClassDrop> per_class_drop(std::span<const std::uint32_t> labels, const ProjectionSplit& split) {
  std::map<std::uint32_t, ClassDrop> out;
  for (std::uint32_t y : labels) ++out[y].total;
  for (int d : split.dropped) ++out[labels[static_cast<std::size_t>(d)]].dropped;
  return out;
}

}  // namespace sfc
