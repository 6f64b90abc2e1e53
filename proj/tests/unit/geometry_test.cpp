#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "eqnet/errors.hpp"
#include "eqnet/geometry/knn.hpp"
#include "eqnet/geometry/pct_io.hpp"
#include "eqnet/geometry/query_selection.hpp"
#include "eqnet/geometry/sampling.hpp"
#include "eqnet/geometry/voxel.hpp"
#include "support/oracles.hpp"

using namespace eqnet;
using namespace eqnet::geometry;
using eqnet::testing::random_points;

namespace {

PointCloud cloud_of(std::vector<Vec3> pts) {
  PointCloud c;
  c.positions = std::move(pts);
  return c;
}

}  // namespace

TEST(Fps, UnitSquareDiagonal) {
  std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  auto picks = farthest_point_sampling_from(pts, 2, 0);
  EXPECT_EQ(picks, (std::vector<std::size_t>{0, 3}));
}

TEST(Fps, KEqualsNReturnsAllIndices) {
  Rng rng(1);
  auto pts = random_points(rng, 30);
  auto picks = farthest_point_sampling(pts, 30, 5);
  std::set<std::size_t> uniq(picks.begin(), picks.end());
  EXPECT_EQ(uniq.size(), 30u);
  EXPECT_TRUE(eqnet::testing::fps_matches_greedy_oracle(pts, picks));
}

TEST(Fps, DuplicatePointsStayDuplicateFree) {
  std::vector<Vec3> pts{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}, {1, 0, 0}};
  auto picks = farthest_point_sampling_from(pts, 4, 1);
  std::set<std::size_t> uniq(picks.begin(), picks.end());
  EXPECT_EQ(uniq.size(), 4u);
}

TEST(Fps, GreedyStepsMatchExhaustiveOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_points(rng, 50);
    auto picks = farthest_point_sampling(pts, 8, rng.next());
    EXPECT_TRUE(eqnet::testing::fps_matches_greedy_oracle(pts, picks));
  }
}

TEST(Fps, SecondPickAttainsGlobalMaximumDistance) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_points(rng, 40);
    auto picks = farthest_point_sampling(pts, 2, rng.next());
    double best = 0.0;
    for (const auto& p : pts) best = std::max(best, squared_distance(p, pts[picks[0]]));
    EXPECT_EQ(squared_distance(pts[picks[1]], pts[picks[0]]), best);
  }
}

TEST(Fps, SeededAndDeterministic) {
  Rng rng(4);
  auto pts = random_points(rng, 64);
  EXPECT_EQ(farthest_point_sampling(pts, 10, 77), farthest_point_sampling(pts, 10, 77));
  EXPECT_EQ(farthest_point_sampling(pts, 10, 77).front(), fps_first_index(64, 77));
}

TEST(Fps, KLargerThanNIsError) {
  std::vector<Vec3> pts{{0, 0, 0}};
  EXPECT_THROW(farthest_point_sampling(pts, 2, 0), ValidationError);
  EXPECT_THROW(farthest_point_sampling(pts, 0, 0), ValidationError);
}

TEST(Knn, SimpleLine) {
  std::vector<Vec3> sources{{3, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  std::vector<Vec3> targets{{0, 0, 0}};
  auto t = k_nearest_neighbors(targets, sources, 2);
  EXPECT_EQ(t.at(0, 0), 1u);
  EXPECT_EQ(t.at(0, 1), 2u);
  EXPECT_EQ(t.distance_at(0, 0), 1.0);
  EXPECT_FALSE(t.has_padding());
}

TEST(Knn, CoincidentSourceComesFirst) {
  std::vector<Vec3> sources{{1, 1, 1}, {0.5, 0.5, 0.5}, {0, 0, 0}};
  std::vector<Vec3> targets{{0.5, 0.5, 0.5}};
  auto t = k_nearest_neighbors(targets, sources, 3);
  EXPECT_EQ(t.at(0, 0), 1u);
  EXPECT_EQ(t.distance_at(0, 0), 0.0);
}

TEST(Knn, TiesGoToSmallerIndex) {
  std::vector<Vec3> sources{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}};
  std::vector<Vec3> targets{{0, 0, 0}};
  auto t = k_nearest_neighbors(targets, sources, 3);
  EXPECT_EQ(t.at(0, 0), 0u);
  EXPECT_EQ(t.at(0, 1), 1u);
  EXPECT_EQ(t.at(0, 2), 2u);
}

TEST(Knn, MatchesSortOracle) {
  Rng rng(5);
  auto targets = random_points(rng, 20);
  auto sources = random_points(rng, 100);
  auto t = k_nearest_neighbors(targets, sources, 5);
  EXPECT_TRUE(eqnet::testing::knn_matches_oracle(t, targets, sources, 5));
}

TEST(Knn, PaddingWhenKExceedsSources) {
  std::vector<Vec3> sources{{0, 0, 0}, {2, 0, 0}};
  std::vector<Vec3> targets{{1.5, 0, 0}};
  auto t = k_nearest_neighbors(targets, sources, 4);
  EXPECT_EQ(t.at(0, 0), 1u);
  EXPECT_EQ(t.at(0, 1), 0u);
  EXPECT_EQ(t.at(0, 2), 1u);
  EXPECT_EQ(t.at(0, 3), 1u);
  EXPECT_FALSE(t.is_padded(0, 1));
  EXPECT_TRUE(t.is_padded(0, 2));
  EXPECT_TRUE(t.is_padded(0, 3));
  EXPECT_EQ(t.valid_per_row(), 2u);
}

TEST(Knn, EmptySourcesIsError) {
  std::vector<Vec3> targets{{0, 0, 0}};
  EXPECT_THROW(k_nearest_neighbors(targets, {}, 1), ValidationError);
}

TEST(Knn, DistancesNonDecreasingAndPermutationInvariant) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto targets = random_points(rng, 10);
    auto sources = random_points(rng, 60);
    auto t = k_nearest_neighbors(targets, sources, 8);
    std::vector<std::size_t> perm(60);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    std::vector<Vec3> permuted(60);
    for (std::size_t j = 0; j < 60; ++j) permuted[j] = sources[perm[j]];
    auto tp = k_nearest_neighbors(targets, permuted, 8);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t s = 0; s < 8; ++s) {
        if (s) {
          EXPECT_LE(t.distance_at(i, s - 1), t.distance_at(i, s));
        }
        // No exact ties among random doubles, so the mapped indices agree.
        EXPECT_EQ(perm[tp.at(i, s)], t.at(i, s));
      }
    }
  }
}

TEST(Voxel, SingleCellByHand) {
  std::vector<Vec3> pts{{0.1, 0.1, 0.1}, {0.9, 0.9, 0.9}};
  auto g = voxelize(pts, {1, 1, 1});
  ASSERT_EQ(g.occupied(), 1u);
  auto c = g.center(g.cells.begin()->first);
  for (double v : c) EXPECT_NEAR(v, 0.6, 1e-15);
}

TEST(Voxel, BoundaryGoesToHigherCell) {
  std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}};
  auto g = voxelize(pts, {1, 1, 1});
  EXPECT_EQ(g.occupied(), 2u);
  EXPECT_EQ(g.cell_of({1, 0, 0}), (CellIndex{1, 0, 0}));
}

TEST(Voxel, PartitionMatchesOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto pts = random_points(rng, 150, 2.0);
    auto g = voxelize(pts, {0.3, 0.5, 0.7});
    EXPECT_TRUE(eqnet::testing::voxel_partition_matches_oracle(g, pts));
  }
}

TEST(Voxel, CentersRevoxelizeToTheirOwnCells) {
  Rng rng(8);
  auto pts = random_points(rng, 200, 3.0);
  auto g = voxelize(pts, {0.4, 0.4, 0.25});
  for (const auto& [cell, _] : g.cells) EXPECT_EQ(g.cell_of(g.center(cell)), cell);
  auto centers = g.centers();
  auto again = voxelize(centers, g.cell_size, g.origin);
  EXPECT_EQ(again.occupied(), g.occupied());
}

TEST(Voxel, NonPositiveCellSizeIsError) {
  std::vector<Vec3> pts{{0, 0, 0}};
  EXPECT_THROW(voxelize(pts, {1, 0, 1}), ValidationError);
}

TEST(QuerySelection, FullCloudIsIdentity) {
  Rng rng(9);
  auto c = cloud_of(random_points(rng, 100));
  auto q = select_query_positions(c, QueryStrategy::full_cloud, {}, 0);
  EXPECT_EQ(q.size(), 100u);
  EXPECT_EQ(q.positions, c.positions);
}

TEST(QuerySelection, ObjectVotesUseSixteenPoints) {
  Rng rng(10);
  auto c = cloud_of(random_points(rng, 100));
  auto q = select_query_positions(c, QueryStrategy::object_votes, {}, 3);
  EXPECT_EQ(q.size(), 16u);
}

TEST(QuerySelection, FpsSubsampleCount) {
  Rng rng(11);
  auto c = cloud_of(random_points(rng, 100));
  QueryParams p;
  p.count = 40;
  EXPECT_EQ(select_query_positions(c, QueryStrategy::fps_subsample, p, 1).size(), 40u);
  p.count = 101;
  EXPECT_THROW(select_query_positions(c, QueryStrategy::fps_subsample, p, 1), ValidationError);
}

TEST(QuerySelection, ProposalGridLattice) {
  auto c = cloud_of({{0, 0, 0}});
  QueryParams p;
  p.box = {{-0.5 + 2, -0.5, -0.5}, {0.5 + 2, 0.5, 0.5}};
  p.grid = 2;
  auto q = select_query_positions(c, QueryStrategy::proposal_grid, p, 0);
  ASSERT_EQ(q.size(), 8u);
  std::set<std::array<double, 3>> got(q.positions.begin(), q.positions.end());
  for (double x : {-0.25, 0.25})
    for (double y : {-0.25, 0.25})
      for (double z : {-0.25, 0.25}) EXPECT_TRUE(got.count({2 + x, y, z}));
}

TEST(QuerySelection, BevGridAtMidHeight) {
  auto c = cloud_of({{0, 0, 0}, {2, 1, 4}});
  QueryParams p;
  p.resolution = 0.5;
  auto q = select_query_positions(c, QueryStrategy::bev_grid, p, 0);
  EXPECT_EQ(q.size(), 4u * 2u);
  for (const auto& pos : q.positions) EXPECT_EQ(pos[2], 2.0);
  EXPECT_EQ(q.positions.front(), (Vec3{0.25, 0.25, 2.0}));
}

TEST(QuerySelection, UnknownStrategyIsConfigError) {
  EXPECT_THROW(parse_query_strategy("spiral"), ConfigError);
  EXPECT_EQ(parse_query_strategy("object_votes"), QueryStrategy::object_votes);
}

TEST(PctIo, BinaryRoundTripIsBitExact) {
  Rng rng(12);
  PointCloud c = cloud_of(random_points(rng, 33));
  c.attribute_dim = 2;
  for (std::size_t i = 0; i < 66; ++i) c.attributes.push_back(rng.normal());
  for (std::size_t i = 0; i < 33; ++i) c.labels.push_back(static_cast<int>(i % 3));
  std::stringstream bin;
  write_pct_binary(bin, c);
  auto back = read_pct(bin);
  EXPECT_EQ(back.positions, c.positions);
  EXPECT_EQ(back.attributes, c.attributes);
  EXPECT_EQ(back.labels, c.labels);

  std::stringstream txt;
  write_pct_text(txt, c);
  auto back_txt = read_pct(txt);
  EXPECT_EQ(back_txt.positions, c.positions);
  EXPECT_EQ(back_txt.attributes, c.attributes);
}

TEST(PctIo, MalformedTextReportsLine) {
  std::stringstream in("PCT1 2 0 0\n1 2 3\n1 x 3\n");
  try {
    read_pct(in);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::stringstream bad("PCX1 1 0 0\n");
  EXPECT_THROW(read_pct(bad), FormatError);
}

TEST(PctIo, PositionsFileParseErrorHasLineNumber) {
  std::stringstream in("# header\n0 0 0\n\n1 2\n");
  try {
    read_positions(in);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
  }
}
