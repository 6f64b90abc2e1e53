#include "eqnet/geometry/query_selection.hpp"

#include <cmath>
#include <string>

#include "eqnet/errors.hpp"
#include "eqnet/geometry/sampling.hpp"

namespace eqnet::geometry {

QueryStrategy parse_query_strategy(std::string_view name) {
  if (name == "bev_grid") return QueryStrategy::bev_grid;
  if (name == "fps_subsample") return QueryStrategy::fps_subsample;
  if (name == "full_cloud") return QueryStrategy::full_cloud;
  if (name == "object_votes") return QueryStrategy::object_votes;
  if (name == "proposal_grid") return QueryStrategy::proposal_grid;
  throw ConfigError("unknown query strategy '" + std::string(name) + "'");
}

std::string_view query_strategy_name(QueryStrategy s) {
  switch (s) {
    case QueryStrategy::bev_grid: return "bev_grid";
    case QueryStrategy::fps_subsample: return "fps_subsample";
    case QueryStrategy::full_cloud: return "full_cloud";
    case QueryStrategy::object_votes: return "object_votes";
    case QueryStrategy::proposal_grid: return "proposal_grid";
  }
  return "unknown";
}

namespace {

std::vector<Vec3> fps_positions(const PointCloud& cloud, std::size_t count, std::uint64_t seed) {
  std::vector<Vec3> out;
  for (auto i : farthest_point_sampling(cloud.positions, count, seed)) out.push_back(cloud.positions[i]);
  return out;
}

std::vector<Vec3> bev_positions(const PointCloud& cloud, const QueryParams& params) {
  if (!(params.resolution > 0.0)) throw ConfigError("bev_grid: resolution must be positive");
  const auto box = bounding_box(cloud.positions);
  const double z = params.z_plane.value_or(0.5 * (box.min[2] + box.max[2]));
  auto cells = [&](int axis) {
    const double extent = box.max[axis] - box.min[axis];
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(extent / params.resolution)));
  };
  const std::size_t nx = cells(0), ny = cells(1);
  std::vector<Vec3> out;
  out.reserve(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy)
    for (std::size_t ix = 0; ix < nx; ++ix)
      out.push_back({box.min[0] + (static_cast<double>(ix) + 0.5) * params.resolution,
                     box.min[1] + (static_cast<double>(iy) + 0.5) * params.resolution, z});
  return out;
}

std::vector<Vec3> lattice_positions(const QueryParams& params) {
  if (params.grid < 1) throw ConfigError("proposal_grid: g must be >= 1");
  const auto& b = params.box;
  Vec3 step;
  for (int k = 0; k < 3; ++k) {
    if (!(b.max[k] > b.min[k])) throw ConfigError("proposal_grid: box must have positive extent");
    step[k] = (b.max[k] - b.min[k]) / static_cast<double>(params.grid);
  }
  std::vector<Vec3> out;
  const std::size_t g = params.grid;
  out.reserve(g * g * g);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j)
      for (std::size_t l = 0; l < g; ++l)
        out.push_back({b.min[0] + (static_cast<double>(i) + 0.5) * step[0],
                       b.min[1] + (static_cast<double>(j) + 0.5) * step[1],
                       b.min[2] + (static_cast<double>(l) + 0.5) * step[2]});
  return out;
}

}  // namespace

QuerySet select_query_positions(const PointCloud& cloud, QueryStrategy strategy,
                                const QueryParams& params, std::uint64_t seed) {
  cloud.validate();
  QuerySet q;
  q.strategy = strategy;
  switch (strategy) {
    case QueryStrategy::bev_grid: q.positions = bev_positions(cloud, params); break;
    case QueryStrategy::fps_subsample: q.positions = fps_positions(cloud, params.count, seed); break;
    case QueryStrategy::full_cloud: q.positions = cloud.positions; break;
    case QueryStrategy::object_votes: q.positions = fps_positions(cloud, kObjectVoteCount, seed); break;
    case QueryStrategy::proposal_grid: q.positions = lattice_positions(params); break;
  }
  return q;
}

}  // namespace eqnet::geometry
