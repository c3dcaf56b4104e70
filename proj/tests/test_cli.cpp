#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "sfc/cli.hpp"
#include "sfc/config.hpp"
#include "sfc/io.hpp"

namespace sfc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Run {
  int code = 0;
  std::vector<json> records;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  std::istringstream lines(out.str());
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty()) r.records.push_back(json::parse(line));
  }
  r.err = err.str();
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sfc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string two_point_scan() {
    write_scan(path("two.bin"), PointCloud::from_points({{1, 0, 0}, {0, 2, 0.1}}, {0.1, 0.2}));
    return path("two.bin");
  }

  std::string occluding_scene() {
    {
      std::ofstream os(path("scene.txt"));
      os << "beams 64 2048 3 25\nreturns all\nplane 0 0 1 -1.73 1\ncylinder 6 0 0.4 -2 2 3\n"
            "box 8 -4 -1.7 12 -1 0 4\ncylinder 15 5 3 -2 6 2\n";
    }
    const auto r = run({"synth", "--spec", path("scene.txt"), "--out-scan", path("scene.bin"), "--out-labels",
                        path("scene.label"), "--seed", "2"});
    EXPECT_EQ(r.code, 0);
    return path("scene.bin");
  }

  fs::path dir_;
};

TEST_F(Cli, IndexReportsTwoPoints) {
  const auto r = run({"index", two_point_scan()});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(r.records.size(), 3u);
  EXPECT_EQ(r.records[0]["record"], "run");
  EXPECT_EQ(r.records[1]["N"], 2);
  EXPECT_EQ(r.records[2]["record"], "summary");
  EXPECT_EQ(r.records[2]["failed"], 0);
}

TEST_F(Cli, StatsPreservationGrowsWithResolution) {
  const auto scan = occluding_scene();
  const auto r = run({"stats", scan, "--resolutions", "64x1024,64x2048,64x4096", "--labels", dir_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto& rec = r.records[1];
  EXPECT_LT(rec["fraction"].get<double>(), 1.0);
  EXPECT_TRUE(rec["monotone_preservation"].get<bool>());
  EXPECT_TRUE(rec.contains("per_class_drop"));
}

TEST_F(Cli, EvalPerfectPredictions) {
  fs::create_directories(path("gt"));
  fs::create_directories(path("pred"));
  const std::vector<std::uint32_t> labels{1, 2, 2, 3, 0};
  write_predictions(path("gt/000.label"), labels);
  write_predictions(path("pred/000.label"), labels);
  const auto r = run({"eval", "--pred", path("pred"), "--gt", path("gt")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto& metrics = r.records[2];
  EXPECT_EQ(metrics["record"], "metrics");
  EXPECT_EQ(metrics["miou"].get<double>(), 100.0);
  EXPECT_EQ(metrics["evaluated_points"], 4);
}

TEST_F(Cli, PartialFailureKeepsBatchGoing) {
  const auto good = two_point_scan();
  {
    std::ofstream os(path("bad.bin"), std::ios::binary);
    os << "12345";
  }
  const auto r = run({"index", good, path("bad.bin"), good, "--jobs", "2"});
  EXPECT_EQ(r.code, 1);
  ASSERT_EQ(r.records.size(), 5u);
  EXPECT_TRUE(r.records[1]["ok"].get<bool>());
  EXPECT_FALSE(r.records[2]["ok"].get<bool>());
  EXPECT_TRUE(r.records[3]["ok"].get<bool>());
  EXPECT_EQ(r.records[4]["failed"], 1);
}

TEST_F(Cli, MalformedInputGivesErrorRecord) {
  const auto r = run({"stats", two_point_scan(), "--resolutions", "64by1800"});
  EXPECT_EQ(r.code, 2);
  ASSERT_FALSE(r.records.empty());
  EXPECT_EQ(r.records.back()["record"], "error");
  EXPECT_NE(run({"no-such-command"}).code, 0);
}

TEST_F(Cli, ConfigFromEnvironment) {
  {
    std::ofstream os(path("cfg.txt"));
    os << "preset = nuscenes32\nchannels = 8\n";
  }
  setenv("SFC_CONFIG", path("cfg.txt").c_str(), 1);
  const auto r = run({"index", two_point_scan()});
  unsetenv("SFC_CONFIG");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.records[0]["config"]["height"], 32);
  EXPECT_EQ(r.records[0]["config"]["channels"], 8);
}

TEST_F(Cli, ForwardWritesOnePredictionPerPoint) {
  const auto scan = two_point_scan();
  {
    std::ofstream os(path("cfg.txt"));
    os << "height = 16\nwidth = 64\nchannels = 4\nclasses = 3\nblocks = 1,1,1,1\n";
  }
  fs::create_directories(path("pred"));
  const auto r = run({"forward", scan, "--config", path("cfg.txt"), "--pred-dir", path("pred"), "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto preds = read_labels(path("pred/two.label"), 2);
  for (auto p : preds) EXPECT_LT(p, 3u);
}

TEST_F(Cli, ReportsAreDeterministicApartFromTimings) {
  const auto scan = occluding_scene();
  auto strip = [](std::vector<json> records) {
    for (auto& r : records) r.erase("timing_ms");
    return records;
  };
  const std::vector<std::string> args{"sample", scan, "--random-seed", "--seed", "9"};
  EXPECT_EQ(strip(run(args).records), strip(run(args).records));
}

TEST(RunConfig, ParsesKeysAndRejectsUnknown) {
  const auto cfg = parse_run_config("# comment\nheight = 32\nwidth=512\nstrides = 1,2\nwrap_azimuth = false\n");
  EXPECT_EQ(cfg.projection.height, 32);
  EXPECT_EQ(cfg.projection.width, 512);
  EXPECT_EQ(cfg.network.strides.cols, 2);
  EXPECT_FALSE(cfg.projection.wrap_azimuth);
  EXPECT_THROW(parse_run_config("colour = blue\n"), ConfigError);
  EXPECT_THROW(parse_run_config("height = tall\n"), ConfigError);
}

}  // namespace
}  // namespace sfc
