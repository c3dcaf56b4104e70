#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sfc/geometry.hpp"

namespace sfc {

// counts(a, b) = evaluated points with ground truth a predicted as b.
// Points whose ground truth is an ignored class are not counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes, std::vector<std::uint32_t> ignored = {0});

  // Throws BadLabel for ids outside [0, classes).
  void add(std::uint32_t truth, std::uint32_t predicted);
  void add(std::span<const std::uint32_t> truth, std::span<const std::uint32_t> predicted);

  std::size_t classes() const { return classes_; }
  std::uint64_t count(std::size_t truth, std::size_t predicted) const { return counts_[truth * classes_ + predicted]; }
  std::uint64_t total() const { return total_; }
  bool ignored(std::size_t cls) const;

 private:
  std::size_t classes_;
  std::vector<std::uint32_t> ignored_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

struct IouResult {
  // TP / (TP + FP + FN); nullopt for ignored classes and classes with empty union.
  std::vector<std::optional<double>> per_class;
  // Mean over classes with a value; 0 when none has one.
  double mean = 0.0;
};

IouResult miou(const ConfusionMatrix& cm);

struct ProjectionSplit {
  std::vector<int> kept;     // one per occupied cell, in (v, u) cell order
  std::vector<int> dropped;  // ascending
};

// Keeps the closest point of every cell (ties to the smaller index) and drops the rest.
ProjectionSplit conventional_projection(std::span<const ProjectedPoint> projected, int height, int width);
ProjectionSplit conventional_projection(const PointCloud& cloud, const SphericalConfig& config);

struct KnnOptions {
  int neighbors = 5;
  int window = 5;
  bool wrap_azimuth = true;
};

// Labels every point: kept points keep their prediction, dropped points take
// the majority label of their nearest kept points by range difference inside
// the window (ties to the label of the nearest voter). A point without voters
// takes the label of its own cell's kept point.
std::vector<std::uint32_t> knn_restore(std::span<const int> kept, std::span<const std::uint32_t> kept_predictions,
                                       std::span<const int> dropped, std::span<const ProjectedPoint> projected,
                                       int height, int width, const KnnOptions& options = {});

struct DropStats {
  std::size_t points = 0;
  std::size_t preserved = 0;
  double fraction = 1.0;
};

DropStats drop_stats(std::span<const ProjectedPoint> projected, int height, int width);
DropStats drop_stats(const PointCloud& cloud, const SphericalConfig& config);

struct ClassDrop {
  std::size_t total = 0;
  std::size_t dropped = 0;
};

// Per ground-truth class, how many points the conventional projection drops.
std::map<std::uint32_t, ClassDrop> per_class_drop(std::span<const std::uint32_t> labels, const ProjectionSplit& split);

}  // namespace sfc
