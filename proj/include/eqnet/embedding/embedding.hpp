#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqnet/geometry/point_cloud.hpp"
#include "eqnet/geometry/voxel.hpp"
#include "eqnet/numerics/layers.hpp"
#include "eqnet/qnet/qnet.hpp"

namespace eqnet::embedding {

using geometry::PointCloud;
using geometry::Vec3;
using numerics::Tensor;
using qnet::SupportSet;

struct LevelTrace {
  // Point backbone: indices into the previous level chosen by FPS.
  std::vector<std::size_t> sampled;
  // Voxel backbone: the grid of this level. At level 0 members are point
  // indices; above that they index the voxels of the level below.
  std::optional<geometry::VoxelGrid> grid;
};

// levels[0] is the finest level, the coarsest comes last.
struct EmbeddingOutput {
  std::vector<SupportSet> levels;
  std::vector<LevelTrace> trace;

  std::size_t level_count() const { return levels.size(); }
};

// ---- point backbone (set abstraction without a decoder) ----

struct PointLevelConfig {
  std::size_t samples = 0;          // FPS centers
  std::size_t group = 16;           // K nearest points of the previous level
  std::vector<std::size_t> widths;  // shared MLP on (offset || features)
};

struct PointEmbeddingConfig {
  std::vector<PointLevelConfig> levels;
  numerics::Activation act = numerics::Activation::gelu;

  void validate() const;
};

struct PointEmbeddingParams {
  PointEmbeddingConfig config;
  std::size_t attribute_dim = 0;
  std::vector<numerics::Mlp> mlps;

  static PointEmbeddingParams create(numerics::ParamStore& store, const std::string& path,
                                     const PointEmbeddingConfig& config, std::size_t attribute_dim);
  std::vector<std::size_t> level_widths() const;
};

// FPS at level l starts from fps_first_index(n, derive_seed(seed, l)) unless
// first_index overrides the level-0 start.
EmbeddingOutput point_embedding_forward(const PointCloud& cloud, const PointEmbeddingParams& params,
                                        std::uint64_t seed,
                                        std::optional<std::size_t> first_index = std::nullopt);

// ---- voxel backbone ----

struct VoxelEmbeddingConfig {
  double cell_size = 0.25;
  // Level-0 MLP on the per-voxel mean of (offset to center || attributes).
  std::vector<std::size_t> stem_widths{32};
  // Output width of each 2x downsampling level (max over children, then linear).
  std::vector<std::size_t> level_widths;
  numerics::Activation act = numerics::Activation::gelu;

  void validate() const;
};

struct VoxelEmbeddingParams {
  VoxelEmbeddingConfig config;
  std::size_t attribute_dim = 0;
  numerics::Mlp stem;
  std::vector<numerics::LinearLayer> merges;

  static VoxelEmbeddingParams create(numerics::ParamStore& store, const std::string& path,
                                     const VoxelEmbeddingConfig& config, std::size_t attribute_dim);
  std::vector<std::size_t> level_widths() const;
};

// The grid is anchored at the bounding-box minimum of the cloud. The seed is
// accepted for interface symmetry; voxelization draws no randomness.
EmbeddingOutput voxel_embedding_forward(const PointCloud& cloud, const VoxelEmbeddingParams& params,
                                        std::uint64_t seed = 0);

// Per-voxel mean of [p - center(cell) || attributes(p)], rows in grid order.
// Members are summed in lexicographic order of their rows, so the result does
// not depend on how the input points are ordered.
std::vector<double> voxel_point_means(const PointCloud& cloud, const geometry::VoxelGrid& grid);

// Coarse grid with doubled cells: child cell c goes to floor(c / 2).
geometry::VoxelGrid coarsen(const geometry::VoxelGrid& fine);

}  // namespace eqnet::embedding
