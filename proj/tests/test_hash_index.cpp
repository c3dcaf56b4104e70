#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sfc/hash_index.hpp"

namespace sfc {
namespace {

TEST(EncodeKey, DirectArithmetic) {
  EXPECT_EQ(encode_key(0, 0, 0, 1800, 32), 0);
  EXPECT_EQ(encode_key(10, 2, 3, 1800, 32), 115523);
}

TEST(EncodeKey, RejectsOutOfDomainAndOverflow) {
  EXPECT_THROW(encode_key(1800, 0, 0, 1800, 32), KeyOverflow);
  EXPECT_THROW(encode_key(0, 0, 32, 1800, 32), KeyOverflow);
  EXPECT_THROW(encode_key(-1, 0, 0, 1800, 32), KeyOverflow);
  const int big = 1 << 30;
  EXPECT_THROW(encode_key(0, big, 0, big, 8), KeyOverflow);
  EXPECT_NO_THROW(encode_key(0, (1 << 30) - 1, 0, 1 << 30, 8));  // (v+1)*W*M == 2^63 exactly
}

TEST(EncodeKey, DecodeIsInverseOnRandomTriples) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int width = std::uniform_int_distribution<int>(1, 5000)(rng);
    const int max_m = std::uniform_int_distribution<int>(1, 200)(rng);
    const FrustumKey k{std::uniform_int_distribution<int>(0, width - 1)(rng),
                       std::uniform_int_distribution<int>(0, 100000)(rng),
                       std::uniform_int_distribution<int>(0, max_m - 1)(rng)};
    const auto key = encode_key(k.u, k.v, k.m, width, max_m);
    ASSERT_EQ(decode_key(key, width, max_m), k);
  }
}

TEST(HashIndex, EmptyCloud) {
  const auto grid = FrustumGrid::build({}, 4, 4);
  const auto index = HashIndex::build(grid);
  EXPECT_EQ(index.size(), 0u);
  EXPECT_FALSE(index.query(0, 0, 0));
  EXPECT_TRUE(visit_frustum(index, grid, 0, 0).empty());
}

TEST(HashIndex, SingleCell) {
  const std::vector<ProjectedPoint> pts{{5, 5, 1.0}, {5, 5, 1.0}, {5, 5, 1.0}};
  const auto grid = FrustumGrid::build(pts, 8, 16);
  const auto index = HashIndex::build(grid);
  EXPECT_EQ(index.size(), 3u);
  EXPECT_EQ(index.max_frustum(), 3);
  for (int m = 0; m < 3; ++m) EXPECT_EQ(index.query(5, 5, m), m);
  EXPECT_FALSE(index.query(5, 5, 3));
  EXPECT_FALSE(index.query(4, 5, 0));
  EXPECT_EQ(visit_frustum(index, grid, 5, 5), (std::vector<int>{0, 1, 2}));
}

TEST(HashIndex, SinglePointFrustum) {
  const std::vector<ProjectedPoint> pts{{1, 1, 1.0}, {2, 1, 1.0}, {2, 1, 2.0}};
  const auto grid = FrustumGrid::build(pts, 4, 4);
  const auto index = HashIndex::build(grid);
  EXPECT_EQ(visit_frustum(index, grid, 1, 1), std::vector<int>{0});
  EXPECT_EQ(grid.indicator(0), 0);
}

TEST(HashIndex, RandomCloudsAgreeWithLinearScan) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto scene = test::random_scene(rng, 200);
    const auto grid = FrustumGrid::build(scene.projected, scene.height, scene.width);
    const auto index = HashIndex::build(grid);
    ASSERT_EQ(index.size(), grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) ASSERT_EQ(index.query(grid.u(k), grid.v(k), grid.m(k)), static_cast<int>(k));

    std::uniform_int_distribution<int> u(-1, scene.width), v(-1, scene.height), m(0, 8);
    for (int probe = 0; probe < 500; ++probe) {
      const int pu = u(rng), pv = v(rng), pm = m(rng);
      std::optional<int> expected;
      for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid.u(k) == pu && grid.v(k) == pv && grid.m(k) == pm) expected = static_cast<int>(k);
      }
      ASSERT_EQ(index.query(pu, pv, pm), expected);
    }

    const auto buckets = test::bucket(scene.projected);
    std::vector<int> seen(grid.size(), 0);
    for (int cv = 0; cv < scene.height; ++cv) {
      for (int cu = 0; cu < scene.width; ++cu) {
        const auto ids = visit_frustum(index, grid, cu, cv);
        ASSERT_EQ(static_cast<int>(ids.size()), grid.frustum_size(cu, cv));
        const auto it = buckets.find({cu, cv});
        if (it == buckets.end()) {
          EXPECT_TRUE(ids.empty());
        } else {
          EXPECT_EQ(ids, it->second);  // scan order == ascending m
        }
        for (int id : ids) ++seen[static_cast<std::size_t>(id)];
      }
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

}  // namespace
}  // namespace sfc
