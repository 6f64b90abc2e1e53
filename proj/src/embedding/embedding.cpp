#include "eqnet/embedding/embedding.hpp"

#include <algorithm>

#include "eqnet/errors.hpp"
#include "eqnet/geometry/knn.hpp"
#include "eqnet/geometry/sampling.hpp"
#include "eqnet/numerics/ops.hpp"
#include "eqnet/numerics/rng.hpp"

namespace eqnet::embedding {

using numerics::RowGroups;

void PointEmbeddingConfig::validate() const {
  if (levels.empty()) throw ConfigError("point embedding: no levels configured");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& lv = levels[l];
    if (lv.samples == 0) throw ConfigError("point embedding level " + std::to_string(l) + ": zero samples");
    if (lv.group == 0) throw ConfigError("point embedding level " + std::to_string(l) + ": zero group size");
    if (lv.widths.empty()) throw ConfigError("point embedding level " + std::to_string(l) + ": no MLP widths");
    if (l && lv.samples > levels[l - 1].samples) {
      throw ConfigError("point embedding level " + std::to_string(l) + ": " + std::to_string(lv.samples) +
                        " samples exceed the " + std::to_string(levels[l - 1].samples) + " of the level below");
    }
    if (l && lv.widths.back() < levels[l - 1].widths.back()) {
      throw ConfigError("point embedding level " + std::to_string(l) + ": feature width decreases");
    }
  }
}

PointEmbeddingParams PointEmbeddingParams::create(numerics::ParamStore& store, const std::string& path,
                                                  const PointEmbeddingConfig& config,
                                                  std::size_t attribute_dim) {
  config.validate();
  PointEmbeddingParams p;
  p.config = config;
  p.attribute_dim = attribute_dim;
  std::size_t in = attribute_dim;
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    p.mlps.push_back(numerics::Mlp::create(store, path + ".level" + std::to_string(l), 3 + in,
                                           config.levels[l].widths, config.act, true));
    in = config.levels[l].widths.back();
  }
  return p;
}

std::vector<std::size_t> PointEmbeddingParams::level_widths() const {
  std::vector<std::size_t> w;
  for (const auto& lv : config.levels) w.push_back(lv.widths.back());
  return w;
}

namespace {

Tensor attribute_tensor(const PointCloud& cloud) {
  return Tensor::from({cloud.size(), cloud.attribute_dim}, cloud.attributes);
}

}  // namespace

EmbeddingOutput point_embedding_forward(const PointCloud& cloud, const PointEmbeddingParams& params,
                                        std::uint64_t seed, std::optional<std::size_t> first_index) {
  cloud.validate();
  if (cloud.attribute_dim != params.attribute_dim) {
    throw DimensionError("point embedding built for " + std::to_string(params.attribute_dim) +
                         " attributes, cloud has " + std::to_string(cloud.attribute_dim));
  }
  EmbeddingOutput out;
  std::vector<Vec3> prev_points = cloud.positions;
  Tensor prev_features = attribute_tensor(cloud);
  for (std::size_t l = 0; l < params.config.levels.size(); ++l) {
    const auto& lv = params.config.levels[l];
    if (lv.samples > prev_points.size()) {
      throw ConfigError("point embedding level " + std::to_string(l) + ": " + std::to_string(lv.samples) +
                        " samples requested from " + std::to_string(prev_points.size()) + " points");
    }
    const std::size_t first = (l == 0 && first_index)
                                  ? *first_index
                                  : geometry::fps_first_index(prev_points.size(), derive_seed(seed, l));
    auto sampled = geometry::farthest_point_sampling_from(prev_points, lv.samples, first);
    std::vector<Vec3> centers;
    centers.reserve(sampled.size());
    for (auto i : sampled) centers.push_back(prev_points[i]);

    const auto table = geometry::k_nearest_neighbors(centers, prev_points, lv.group);
    std::vector<double> offsets(table.index.size() * 3);
    for (std::size_t i = 0; i < centers.size(); ++i)
      for (std::size_t s = 0; s < table.k; ++s) {
        const auto& p = prev_points[table.at(i, s)];
        for (int c = 0; c < 3; ++c) offsets[(i * table.k + s) * 3 + c] = p[c] - centers[i][c];
      }
    Tensor input = Tensor::from({table.index.size(), 3}, std::move(offsets));
    if (prev_features.cols() > 0) {
      input = numerics::concat_cols({input, numerics::gather_rows(prev_features, table.index)});
    }
    Tensor features = numerics::pool_max(params.mlps[l](input), RowGroups::uniform(centers.size(), table.k));

    out.levels.push_back(SupportSet{centers, features, static_cast<int>(l)});
    out.trace.push_back(LevelTrace{std::move(sampled), std::nullopt});
    prev_points = std::move(centers);
    prev_features = std::move(features);
  }
  return out;
}

void VoxelEmbeddingConfig::validate() const {
  if (!(cell_size > 0.0)) throw ConfigError("voxel embedding: cell size must be positive");
  if (stem_widths.empty()) throw ConfigError("voxel embedding: no stem widths");
  std::size_t prev = stem_widths.back();
  for (auto w : level_widths) {
    if (w < prev) throw ConfigError("voxel embedding: feature width decreases");
    prev = w;
  }
}

VoxelEmbeddingParams VoxelEmbeddingParams::create(numerics::ParamStore& store, const std::string& path,
                                                  const VoxelEmbeddingConfig& config,
                                                  std::size_t attribute_dim) {
  config.validate();
  VoxelEmbeddingParams p;
  p.config = config;
  p.attribute_dim = attribute_dim;
  p.stem = numerics::Mlp::create(store, path + ".stem", 3 + attribute_dim, config.stem_widths, config.act, true);
  std::size_t in = config.stem_widths.back();
  for (std::size_t l = 0; l < config.level_widths.size(); ++l) {
    p.merges.push_back(numerics::LinearLayer::create(store, path + ".level" + std::to_string(l + 1), in,
                                                     config.level_widths[l]));
    in = config.level_widths[l];
  }
  return p;
}

std::vector<std::size_t> VoxelEmbeddingParams::level_widths() const {
  std::vector<std::size_t> w{config.stem_widths.back()};
  w.insert(w.end(), config.level_widths.begin(), config.level_widths.end());
  return w;
}

std::vector<double> voxel_point_means(const PointCloud& cloud, const geometry::VoxelGrid& grid) {
  const std::size_t width = 3 + cloud.attribute_dim;
  std::vector<double> means;
  means.reserve(grid.occupied() * width);
  std::vector<std::vector<double>> rows;
  for (const auto& [cell, members] : grid.cells) {
    const Vec3 center = grid.center(cell);
    rows.clear();
    for (auto i : members) {
      std::vector<double> row(width);
      for (int c = 0; c < 3; ++c) row[c] = cloud.positions[i][c] - center[c];
      auto attrs = cloud.attributes_of(i);
      std::copy(attrs.begin(), attrs.end(), row.begin() + 3);
      rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end());
    std::vector<double> acc(width, 0.0);
    for (const auto& row : rows)
      for (std::size_t c = 0; c < width; ++c) acc[c] += row[c];
    for (double v : acc) means.push_back(v / static_cast<double>(rows.size()));
  }
  return means;
}

namespace {

std::int64_t floor_half(std::int64_t v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

}  // namespace

geometry::VoxelGrid coarsen(const geometry::VoxelGrid& fine) {
  geometry::VoxelGrid coarse;
  coarse.origin = fine.origin;
  for (int c = 0; c < 3; ++c) coarse.cell_size[c] = fine.cell_size[c] * 2.0;
  std::size_t ordinal = 0;
  for (const auto& [cell, members] : fine.cells) {
    coarse.cells[{floor_half(cell[0]), floor_half(cell[1]), floor_half(cell[2])}].push_back(ordinal++);
  }
  return coarse;
}

EmbeddingOutput voxel_embedding_forward(const PointCloud& cloud, const VoxelEmbeddingParams& params,
                                        std::uint64_t) {
  cloud.validate();
  if (cloud.attribute_dim != params.attribute_dim) {
    throw DimensionError("voxel embedding built for " + std::to_string(params.attribute_dim) +
                         " attributes, cloud has " + std::to_string(cloud.attribute_dim));
  }
  if (cloud.size() == 0) throw ValidationError("voxel embedding: level 0 has no occupied voxels");
  const double cs = params.config.cell_size;
  auto grid = geometry::voxelize(cloud.positions, {cs, cs, cs});
  if (grid.occupied() == 0) throw ValidationError("voxel embedding: level 0 has no occupied voxels");

  EmbeddingOutput out;
  const Tensor means = Tensor::from({grid.occupied(), 3 + cloud.attribute_dim}, voxel_point_means(cloud, grid));
  Tensor features = params.stem(means);
  out.levels.push_back(SupportSet{grid.centers(), features, 0});
  out.trace.push_back(LevelTrace{{}, grid});

  for (std::size_t l = 0; l < params.merges.size(); ++l) {
    auto coarse = coarsen(grid);
    if (coarse.occupied() == 0) {
      throw ValidationError("voxel embedding: level " + std::to_string(l + 1) + " has no occupied voxels");
    }
    RowGroups groups;
    for (const auto& [cell, children] : coarse.cells) groups.add_group(children);
    features = params.merges[l](numerics::pool_max(features, groups));
    out.levels.push_back(SupportSet{coarse.centers(), features, static_cast<int>(l + 1)});
    out.trace.push_back(LevelTrace{{}, coarse});
    grid = std::move(coarse);
  }
  return out;
}

}  // namespace eqnet::embedding
