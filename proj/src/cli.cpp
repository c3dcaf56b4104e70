#include "sfc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfc/config.hpp"
#include "sfc/frustum.hpp"
#include "sfc/hash_index.hpp"
#include "sfc/io.hpp"
#include "sfc/losses.hpp"
#include "sfc/metrics.hpp"
#include "sfc/network.hpp"
#include "sfc/sampling.hpp"
#include "sfc/synthetic.hpp"

namespace sfc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  int jobs = 1;
};

RunConfig load_config(const std::string& path) {
  if (!path.empty()) return read_run_config(path);
  if (const char* env = std::getenv("SFC_CONFIG"); env && *env) return read_run_config(env);
  return RunConfig{};
}

json config_echo(const RunConfig& cfg) {
  constexpr double kToDeg = 180.0 / 3.14159265358979323846;
  const NetworkConfig& n = cfg.network;
  return json{{"height", cfg.projection.height},
              {"width", cfg.projection.width},
              {"fov_up_deg", cfg.projection.fov_up * kToDeg},
              {"fov_down_deg", cfg.projection.fov_down * kToDeg},
              {"wrap_azimuth", cfg.projection.wrap_azimuth},
              {"channels", n.channels},
              {"classes", n.classes},
              {"blocks", n.extraction_blocks},
              {"kernel_size", n.kernel_size},
              {"strides", {n.strides.rows, n.strides.cols}},
              {"bn_eps", n.bn_eps},
              {"normalization", cfg.normalize_semantic_kitti ? "semantic_kitti" : "identity"}};
}

// Runs `task` for every item on up to `jobs` threads; results keep input order.
std::vector<json> run_batch(const std::vector<std::string>& items, int jobs,
                            const std::function<json(const std::string&)>& task) {
  std::vector<json> results(items.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        results[i] = task(items[i]);
        results[i]["ok"] = true;
      } catch (const std::exception& e) {
        results[i] = json{{"record", "scan"}, {"scan", items[i]}, {"ok", false}, {"error", e.what()}};
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(1, items.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

class Reporter {
 public:
  Reporter(std::ostream& out, const std::string& path) : out_(&out) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw IoError("cannot open report file: " + path);
      out_ = &file_;
    }
  }
  void emit(const json& record) { *out_ << record.dump() << "\n"; }

 private:
  std::ostream* out_;
  std::ofstream file_;
};

std::pair<int, int> parse_pair(const std::string& text, char sep) {
  const auto pos = text.find(sep);
  if (pos == std::string::npos) throw ConfigError("expected two values separated by '" + std::string(1, sep) + "': " + text);
  try {
    return {std::stoi(text.substr(0, pos)), std::stoi(text.substr(pos + 1))};
  } catch (const std::exception&) {
    throw ConfigError("not a pair of integers: " + text);
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<fs::path> companion_labels(const std::string& dir, const std::string& scan) {
  if (dir.empty()) return std::nullopt;
  const fs::path candidate = fs::path(dir) / (fs::path(scan).stem().string() + ".label");
  if (fs::exists(candidate)) return candidate;
  return std::nullopt;
}

json histogram(std::span<const std::uint32_t> labels) {
  std::map<std::uint32_t, std::size_t> counts;
  for (auto l : labels) ++counts[l];
  json out = json::object();
  for (const auto& [l, c] : counts) out[std::to_string(l)] = c;
  return out;
}

json iou_record(const IouResult& r) {
  json per_class = json::object();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    if (r.per_class[c]) per_class[std::to_string(c)] = 100.0 * *r.per_class[c];
  }
  return json{{"miou", 100.0 * r.mean}, {"per_class_iou", per_class}};
}

// ---- index ----

json index_scan(const std::string& scan, const RunConfig& cfg) {
  json timing;
  auto t0 = Clock::now();
  const PointCloud cloud = read_scan(scan);
  timing["read"] = ms_since(t0);
  t0 = Clock::now();
  const auto projected = project_cloud(cloud.xyz, cfg.projection);
  timing["project"] = ms_since(t0);
  t0 = Clock::now();
  const FrustumGrid grid = FrustumGrid::build(projected, cfg.projection.height, cfg.projection.width);
  timing["build_grid"] = ms_since(t0);
  t0 = Clock::now();
  const HashIndex index = HashIndex::build(grid);
  timing["build_index"] = ms_since(t0);

  std::size_t total = 0;
  for (const auto& [key, count] : grid.cell_counts()) total += static_cast<std::size_t>(count);
  bool roundtrip = index.size() == grid.size();
  for (std::size_t k = 0; k < grid.size() && roundtrip; ++k) {
    roundtrip = index.query(grid.u(k), grid.v(k), grid.m(k)) == static_cast<int>(k);
  }
  std::size_t visited = 0;
  bool visit_sizes = true;
  for (const auto& [key, count] : grid.cell_counts()) {
    const int u = static_cast<int>(key % grid.width());
    const int v = static_cast<int>(key / grid.width());
    const auto ids = visit_frustum(index, grid, u, v);
    visit_sizes = visit_sizes && static_cast<int>(ids.size()) == count;
    visited += ids.size();
  }
  json record{{"record", "scan"},
              {"scan", scan},
              {"N", cloud.size()},
              {"occupied_cells", grid.occupied_cells()},
              {"max_frustum", grid.size() == 0 ? 0 : grid.max_frustum_size()},
              {"checks",
               {{"lossless", total == cloud.size()},
                {"key_roundtrip", roundtrip},
                {"visit_complete", visit_sizes && visited == cloud.size()}}},
              {"timing_ms", timing}};
  if (total != cloud.size() || !roundtrip || !visit_sizes || visited != cloud.size()) {
    throw CorruptIndicator("frustum index invariant check failed for " + scan);
  }
  return record;
}

// ---- stats ----

json stats_scan(const std::string& scan, const RunConfig& cfg, const std::vector<std::pair<int, int>>& resolutions,
                const std::string& labels_dir) {
  const auto t0 = Clock::now();
  const PointCloud cloud = read_scan(scan);
  std::optional<std::vector<std::uint32_t>> labels;
  if (const auto path = companion_labels(labels_dir, scan)) labels = read_labels(*path, cloud.size());
  json per_res = json::array();
  for (const auto& [h, w] : resolutions) {
    SphericalConfig proj = cfg.projection;
    proj.height = h;
    proj.width = w;
    const auto projected = project_cloud(cloud.xyz, proj);
    const DropStats s = drop_stats(projected, h, w);
    json entry{{"resolution", std::to_string(h) + "x" + std::to_string(w)},
               {"N", s.points},
               {"preserved", s.preserved},
               {"fraction", s.fraction}};
    if (labels) {
      const auto split = conventional_projection(projected, h, w);
      json drops = json::object();
      for (const auto& [cls, d] : per_class_drop(*labels, split)) {
        drops[std::to_string(cls)] = {{"total", d.total},
                                      {"dropped", d.dropped},
                                      {"rate", static_cast<double>(d.dropped) / static_cast<double>(d.total)}};
      }
      entry["per_class_drop"] = drops;
    }
    per_res.push_back(entry);
  }
  json record{{"record", "scan"}, {"scan", scan}, {"N", cloud.size()}, {"resolutions", per_res}};
  if (!per_res.empty()) {
    record["preserved"] = per_res[0]["preserved"];
    record["fraction"] = per_res[0]["fraction"];
    if (per_res[0].contains("per_class_drop")) record["per_class_drop"] = per_res[0]["per_class_drop"];
  }
  bool monotone = true;
  for (std::size_t i = 1; i < per_res.size(); ++i) {
    monotone = monotone && per_res[i]["preserved"].get<std::size_t>() >= per_res[i - 1]["preserved"].get<std::size_t>();
  }
  record["monotone_preservation"] = monotone;
  record["timing_ms"] = {{"total", ms_since(t0)}};
  return record;
}

// ---- sample ----

json sample_scan(const std::string& scan, const RunConfig& cfg, Strides strides, const std::string& out_dir,
                 std::uint64_t seed, bool random_seed) {
  json timing;
  const PointCloud cloud = read_scan(scan);
  auto t0 = Clock::now();
  const auto projected = project_cloud(cloud.xyz, cfg.projection);
  const FrustumGrid grid = FrustumGrid::build(projected, cfg.projection.height, cfg.projection.width);
  const HashIndex index = HashIndex::build(grid);
  timing["build"] = ms_since(t0);
  t0 = Clock::now();
  const SampledCloud sampled =
      f2ps(grid, index, cloud.xyz, strides, random_seed ? SeedPolicy::random(seed) : SeedPolicy::first());
  timing["f2ps"] = ms_since(t0);

  std::size_t expected = 0;
  std::size_t windows = 0;
  const int rows = (grid.height() + strides.rows - 1) / strides.rows;
  const int cols = (grid.width() + strides.cols - 1) / strides.cols;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto merged = merged_window(grid, index, r, c, strides);
      if (merged.empty()) continue;
      ++windows;
      expected += window_sample_count(merged.size(), strides);
    }
  }
  const FrustumGrid down = rebuild_downsampled_grid(sampled);
  json record{{"record", "scan"},
              {"scan", scan},
              {"N", cloud.size()},
              {"sampled", sampled.size()},
              {"windows", windows},
              {"count_law", expected == sampled.size()},
              {"strides", {strides.rows, strides.cols}},
              {"downsampled_grid", {down.height(), down.width()}},
              {"downsampled_occupied", down.occupied_cells()}};
  if (!out_dir.empty()) {
    const fs::path path = fs::path(out_dir) / (fs::path(scan).stem().string() + ".sampled.bin");
    write_scan(path, cloud.select(sampled.parent_indices));
    record["output"] = path.string();
  }
  record["timing_ms"] = timing;
  return record;
}

// ---- bench-sampling ----

std::vector<Vec3> bench_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> azimuth(-3.14159265358979, 3.14159265358979);
  std::uniform_real_distribution<double> elevation(-24.0 * 3.14159265358979 / 180.0, 2.0 * 3.14159265358979 / 180.0);
  std::uniform_real_distribution<double> range(2.0, 60.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) {
    const double a = azimuth(rng);
    const double e = elevation(rng);
    const double r = range(rng);
    p = {r * std::cos(e) * std::cos(a), r * std::cos(e) * std::sin(a), r * std::sin(e)};
  }
  return pts;
}

// ---- forward ----

json forward_scan(const std::string& scan, const RunConfig& cfg, const LayerParams& params,
                  const std::string& pred_dir, const std::string& labels_dir) {
  json timing;
  const PointCloud cloud = read_scan(scan);
  auto t0 = Clock::now();
  const ForwardResult result = sfcnet_forward(cloud, params, cfg.network, cfg.projection, cfg.norm_stats());
  timing["forward"] = ms_since(t0);
  const auto predictions = argmax_rows(result.logits);
  bool finite = true;
  for (double v : result.logits.data()) finite = finite && std::isfinite(v);
  json record{{"record", "scan"},
              {"scan", scan},
              {"N", cloud.size()},
              {"logit_rows", result.logits.rows()},
              {"classes", result.logits.cols()},
              {"scale_sizes", result.scale_sizes},
              {"logits_finite", finite},
              {"prediction_histogram", histogram(predictions)}};
  if (const auto path = companion_labels(labels_dir, scan)) {
    const auto labels = read_labels(*path, cloud.size());
    const bool in_range = std::all_of(labels.begin(), labels.end(),
                                      [&](std::uint32_t l) { return l < static_cast<std::uint32_t>(cfg.network.classes); });
    if (in_range) {
      const LossConfig loss_cfg = LossConfig::uniform(cfg.network.classes);
      record["multi_layer_loss"] = multi_layer_loss(result.auxiliary_logits, labels, loss_cfg);
    }
  }
  if (!pred_dir.empty()) {
    const fs::path path = fs::path(pred_dir) / (fs::path(scan).stem().string() + ".label");
    write_predictions(path, predictions);
    record["output"] = path.string();
  }
  record["timing_ms"] = timing;
  return record;
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Config file (defaults to $SFC_CONFIG)");
  cmd->add_option("--out", opts.out_path, "Write the report to this file instead of stdout");
  cmd->add_option("--seed", opts.seed, "Seed for every random choice");
  cmd->add_option("--jobs", opts.jobs, "Scans processed in parallel")->check(CLI::PositiveNumber);
}

int finish(Reporter& reporter, const std::vector<json>& records, Clock::time_point start) {
  std::size_t failed = 0;
  for (const json& r : records) {
    reporter.emit(r);
    if (!r.value("ok", false)) ++failed;
  }
  reporter.emit(json{{"record", "summary"},
                     {"records", records.size()},
                     {"failed", failed},
                     {"timing_ms", {{"total", ms_since(start)}}}});
  return failed == 0 ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spherical frustum point-cloud toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  CommonOptions opts;

  std::vector<std::string> scans;
  auto* index_cmd = app.add_subcommand("index", "Build the frustum grid and hash index of scans");
  index_cmd->add_option("scans", scans, "Scan files")->required();
  add_common(index_cmd, opts);

  std::string labels_dir;
  std::string resolutions = "64x1800,64x2048,64x4096";
  auto* stats_cmd = app.add_subcommand("stats", "Conventional-projection drop statistics");
  stats_cmd->add_option("scans", scans, "Scan files")->required();
  stats_cmd->add_option("--labels", labels_dir, "Directory of <stem>.label files");
  stats_cmd->add_option("--resolutions", resolutions, "Comma-separated HxW list");
  add_common(stats_cmd, opts);

  std::string strides_text = "2,2";
  std::string out_dir;
  bool random_seed = false;
  auto* sample_cmd = app.add_subcommand("sample", "Frustum farthest point sampling");
  sample_cmd->add_option("scans", scans, "Scan files")->required();
  sample_cmd->add_option("--strides", strides_text, "Window strides rows,cols");
  sample_cmd->add_option("--out-dir", out_dir, "Write <stem>.sampled.bin here");
  sample_cmd->add_flag("--random-seed", random_seed, "Seed each window at a random point");
  add_common(sample_cmd, opts);

  std::string sizes_text = "20000,40000,80000,160000";
  std::size_t fps_limit = 80000;
  int repeats = 3;
  auto* bench_cmd = app.add_subcommand("bench-sampling", "F2PS versus plain FPS timing");
  bench_cmd->add_option("--sizes", sizes_text, "Comma-separated point counts");
  bench_cmd->add_option("--fps-limit", fps_limit, "Skip plain FPS above this size");
  bench_cmd->add_option("--repeats", repeats, "Timing repetitions (minimum is reported)")->check(CLI::PositiveNumber);
  add_common(bench_cmd, opts);

  std::string weights_path;
  std::string pred_dir;
  auto* forward_cmd = app.add_subcommand("forward", "Run the segmentation network");
  forward_cmd->add_option("scans", scans, "Scan files")->required();
  forward_cmd->add_option("--weights", weights_path, "Weight file (seeded initialization when absent)");
  forward_cmd->add_option("--pred-dir", pred_dir, "Write <stem>.label predictions here");
  forward_cmd->add_option("--labels", labels_dir, "Directory of <stem>.label files for the loss report");
  add_common(forward_cmd, opts);

  std::string labels_file;
  std::string pred_file;
  int knn = 5;
  int window = 5;
  int classes = 0;
  auto* baseline_cmd = app.add_subcommand("baseline", "Conventional projection with KNN restoration vs all points");
  baseline_cmd->add_option("scans", scans, "Scan file")->required()->expected(1);
  baseline_cmd->add_option("--labels", labels_file, "Ground-truth label file")->required();
  baseline_cmd->add_option("--pred", pred_file, "Per-point predictions (defaults to the labels)");
  baseline_cmd->add_option("--knn", knn, "Voters per dropped point")->check(CLI::PositiveNumber);
  baseline_cmd->add_option("--window", window, "Search window in cells")->check(CLI::PositiveNumber);
  baseline_cmd->add_option("--classes", classes, "Class count (default: largest id + 1)");
  add_common(baseline_cmd, opts);

  std::string spec_path;
  std::string out_scan;
  std::string out_labels;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled scan");
  synth_cmd->add_option("--spec", spec_path, "Scene spec file (default: seeded street scene)");
  synth_cmd->add_option("--out-scan", out_scan, "Output scan")->required();
  synth_cmd->add_option("--out-labels", out_labels, "Output labels");
  add_common(synth_cmd, opts);

  std::string gt_dir;
  std::string ignore_text = "0";
  auto* eval_cmd = app.add_subcommand("eval", "Confusion matrix and mIoU of prediction files");
  eval_cmd->add_option("--pred", pred_dir, "Prediction directory")->required();
  eval_cmd->add_option("--gt", gt_dir, "Ground-truth directory")->required();
  eval_cmd->add_option("--classes", classes, "Class count (default: largest id + 1)");
  eval_cmd->add_option("--ignore", ignore_text, "Comma-separated ignored class ids");
  add_common(eval_cmd, opts);

  auto* init_cmd = app.add_subcommand("init-weights", "Write seeded initial network weights");
  init_cmd->add_option("--weights", weights_path, "Output weight file")->required();
  add_common(init_cmd, opts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  const auto start = Clock::now();
  std::string command;
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();

  std::unique_ptr<Reporter> reporter;
  try {
    reporter = std::make_unique<Reporter>(out, opts.out_path);
    const RunConfig cfg = load_config(opts.config_path);
    json header{{"record", "run"}, {"command", command}, {"version", kVersion}, {"config", config_echo(cfg)},
                {"seed", opts.seed}};

    if (command == "index") {
      reporter->emit(header);
      return finish(*reporter, run_batch(scans, opts.jobs, [&](const std::string& s) { return index_scan(s, cfg); }),
                    start);
    }
    if (command == "stats") {
      std::vector<std::pair<int, int>> res;
      for (const auto& r : split(resolutions, ',')) res.push_back(parse_pair(r, 'x'));
      header["resolutions"] = resolutions;
      reporter->emit(header);
      return finish(*reporter,
                    run_batch(scans, opts.jobs, [&](const std::string& s) { return stats_scan(s, cfg, res, labels_dir); }),
                    start);
    }
    if (command == "sample") {
      const auto [sr, sc] = parse_pair(strides_text, ',');
      reporter->emit(header);
      return finish(*reporter, run_batch(scans, opts.jobs, [&](const std::string& s) {
                      return sample_scan(s, cfg, Strides{sr, sc}, out_dir, opts.seed, random_seed);
                    }),
                    start);
    }
    if (command == "bench-sampling") {
      reporter->emit(header);
      std::vector<json> records;
      for (const auto& item : split(sizes_text, ',')) {
        const auto n = static_cast<std::size_t>(std::stoull(item));
        const auto pts = bench_points(n, opts.seed);
        json timing;
        auto t0 = Clock::now();
        const auto projected = project_cloud(pts, cfg.projection);
        const FrustumGrid grid = FrustumGrid::build(projected, cfg.projection.height, cfg.projection.width);
        const HashIndex index = HashIndex::build(grid);
        timing["build"] = ms_since(t0);
        double best = 0.0;
        SampledCloud sampled;
        for (int r = 0; r < repeats; ++r) {
          t0 = Clock::now();
          sampled = f2ps(grid, index, pts, cfg.network.strides);
          const double t = ms_since(t0);
          best = r == 0 ? t : std::min(best, t);
        }
        timing["f2ps"] = best;
        json record{{"record", "size"}, {"N", n}, {"sampled", sampled.size()}, {"ok", true}};
        if (n <= fps_limit) {
          t0 = Clock::now();
          const auto picked = fps(pts, sampled.size());
          timing["fps"] = ms_since(t0);
          record["fps_sampled"] = picked.size();
        } else {
          record["fps_skipped"] = true;
        }
        record["timing_ms"] = timing;
        records.push_back(record);
      }
      return finish(*reporter, records, start);
    }
    if (command == "forward") {
      const LayerParams params =
          weights_path.empty() ? LayerParams::initialize(cfg.network, opts.seed) : read_weights(weights_path, cfg.network);
      header["weights"] = weights_path.empty() ? json("seeded") : json(weights_path);
      reporter->emit(header);
      return finish(*reporter, run_batch(scans, opts.jobs, [&](const std::string& s) {
                      return forward_scan(s, cfg, params, pred_dir, labels_dir);
                    }),
                    start);
    }
    if (command == "baseline") {
      reporter->emit(header);
      return finish(*reporter, run_batch(scans, 1, [&](const std::string& s) {
                      const PointCloud cloud = read_scan(s);
                      const auto truth = read_labels(labels_file, cloud.size());
                      const auto pred = pred_file.empty() ? truth : read_labels(pred_file, cloud.size());
                      std::uint32_t top = 0;
                      for (auto l : truth) top = std::max(top, l);
                      for (auto l : pred) top = std::max(top, l);
                      const std::size_t n_classes = classes > 0 ? static_cast<std::size_t>(classes) : top + 1;
                      const auto projected = project_cloud(cloud.xyz, cfg.projection);
                      const auto split_ids =
                          conventional_projection(projected, cfg.projection.height, cfg.projection.width);
                      std::vector<std::uint32_t> kept_pred;
                      for (int id : split_ids.kept) kept_pred.push_back(pred[static_cast<std::size_t>(id)]);
                      const KnnOptions knn_opts{knn, window, cfg.projection.wrap_azimuth};
                      const auto restored = knn_restore(split_ids.kept, kept_pred, split_ids.dropped, projected,
                                                        cfg.projection.height, cfg.projection.width, knn_opts);
                      ConfusionMatrix base_cm(std::max<std::size_t>(n_classes, 1));
                      base_cm.add(truth, restored);
                      ConfusionMatrix frustum_cm(std::max<std::size_t>(n_classes, 1));
                      frustum_cm.add(truth, pred);
                      std::size_t restored_correct = 0;
                      for (int d : split_ids.dropped) {
                        restored_correct += restored[static_cast<std::size_t>(d)] == truth[static_cast<std::size_t>(d)];
                      }
                      return json{{"record", "scan"},
                                  {"scan", s},
                                  {"N", cloud.size()},
                                  {"kept", split_ids.kept.size()},
                                  {"dropped", split_ids.dropped.size()},
                                  {"restored_accuracy",
                                   split_ids.dropped.empty()
                                       ? 1.0
                                       : static_cast<double>(restored_correct) / split_ids.dropped.size()},
                                  {"baseline", iou_record(miou(base_cm))},
                                  {"frustum", iou_record(miou(frustum_cm))}};
                    }),
                    start);
    }
    if (command == "synth") {
      SceneSpec spec = spec_path.empty() ? street_scene(opts.seed) : read_scene_spec(spec_path);
      header["spec"] = spec_path.empty() ? json("street") : json(spec_path);
      reporter->emit(header);
      const auto t0 = Clock::now();
      const PointCloud cloud = gen_synthetic_scene(spec, opts.seed);
      write_scan(out_scan, cloud);
      if (!out_labels.empty()) write_raw_labels(out_labels, *cloud.labels);
      json record{{"record", "scan"}, {"scan", out_scan}, {"N", cloud.size()}, {"ok", true},
                  {"label_histogram", histogram(*cloud.labels)}, {"timing_ms", {{"generate", ms_since(t0)}}}};
      if (!out_labels.empty()) record["labels"] = out_labels;
      return finish(*reporter, {record}, start);
    }
    if (command == "eval") {
      std::vector<std::uint32_t> ignored;
      for (const auto& id : split(ignore_text, ',')) ignored.push_back(static_cast<std::uint32_t>(std::stoul(id)));
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(gt_dir)) {
        if (entry.path().extension() == ".label") files.push_back(entry.path());
      }
      std::sort(files.begin(), files.end());
      header["files"] = files.size();
      reporter->emit(header);
      std::vector<json> records;
      std::vector<std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>>> pairs;
      std::uint32_t top = 0;
      for (const auto& gt_path : files) {
        try {
          auto truth = read_raw_labels(gt_path);
          for (auto& v : truth) v &= 0xFFFFu;
          auto pred = read_labels(fs::path(pred_dir) / gt_path.filename(), truth.size());
          for (auto l : truth) top = std::max(top, l);
          for (auto l : pred) top = std::max(top, l);
          records.push_back({{"record", "scan"}, {"scan", gt_path.filename().string()}, {"N", truth.size()}, {"ok", true}});
          pairs.emplace_back(std::move(truth), std::move(pred));
        } catch (const std::exception& e) {
          records.push_back({{"record", "scan"}, {"scan", gt_path.filename().string()}, {"ok", false}, {"error", e.what()}});
        }
      }
      const std::size_t n_classes = classes > 0 ? static_cast<std::size_t>(classes) : top + 1;
      ConfusionMatrix cm(n_classes, ignored);
      for (const auto& [truth, pred] : pairs) cm.add(truth, pred);
      json result = iou_record(miou(cm));
      result["record"] = "metrics";
      result["classes"] = n_classes;
      result["evaluated_points"] = cm.total();
      result["ok"] = true;
      records.push_back(result);
      return finish(*reporter, records, start);
    }
    if (command == "init-weights") {
      LayerParams params = LayerParams::initialize(cfg.network, opts.seed);
      write_weights(weights_path, params);
      reporter->emit(header);
      return finish(*reporter, {json{{"record", "weights"}, {"path", weights_path}, {"tensors", named_tensors(params).size()}, {"ok", true}}},
                    start);
    }
    throw ConfigError("unknown command: " + command);
  } catch (const std::exception& e) {
    const json diag{{"record", "error"}, {"command", command}, {"message", e.what()}, {"ok", false}};
    if (reporter) reporter->emit(diag);
    else out << diag.dump() << "\n";
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace sfc
