#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "eqnet/geometry/point_cloud.hpp"

namespace eqnet::geometry {

enum class QueryStrategy {
  bev_grid,       // x-y pixel centers over the cloud extent at one z plane
  fps_subsample,  // FPS subset of the raw input
  full_cloud,     // every input point
  object_votes,   // 16 FPS points voting for an object category
  proposal_grid,  // g x g x g lattice inside an axis-aligned box
};

inline constexpr std::size_t kObjectVoteCount = 16;

QueryStrategy parse_query_strategy(std::string_view name);
std::string_view query_strategy_name(QueryStrategy s);

struct QueryParams {
  double resolution = 0.5;        // bev_grid pixel size
  std::optional<double> z_plane;  // bev_grid; defaults to mid-height of the cloud
  std::size_t count = 1024;       // fps_subsample
  Bounds box{};                   // proposal_grid, world-frame axis-aligned
  std::size_t grid = 2;           // proposal_grid lattice size g
};

// Positions in continuous space; they need not coincide with input points.
struct QuerySet {
  std::vector<Vec3> positions;
  QueryStrategy strategy = QueryStrategy::full_cloud;

  std::size_t size() const noexcept { return positions.size(); }
};

QuerySet select_query_positions(const PointCloud& cloud, QueryStrategy strategy,
                                const QueryParams& params, std::uint64_t seed);

}  // namespace eqnet::geometry
