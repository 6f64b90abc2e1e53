#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "eqnet/embedding/embedding.hpp"
#include "eqnet/numerics/param_store.hpp"
#include "eqnet/qnet/qnet.hpp"
#include "eqnet/tasks/heads.hpp"

namespace eqnet::tasks {

using geometry::PointCloud;

enum class TaskKind { classification, segmentation };
enum class EmbeddingKind { point, voxel };

TaskKind parse_task(std::string_view name);
std::string_view task_name(TaskKind t);
EmbeddingKind parse_embedding(std::string_view name);
std::string_view embedding_name(EmbeddingKind e);

struct ModelConfig {
  TaskKind task = TaskKind::classification;
  EmbeddingKind embedding = EmbeddingKind::point;
  embedding::PointEmbeddingConfig point;
  embedding::VoxelEmbeddingConfig voxel;
  // Shared by every level; `dim` is overridden by each level's feature width.
  qnet::QNetConfig qnet;
  std::size_t head_hidden = 64;
  std::size_t classes = 4;
  std::size_t attribute_dim = 0;
  VoteMode vote = VoteMode::pooled;
  // Classification query count; anything but 16 needs any_query_count.
  std::size_t vote_queries = kVoteQueries;
  bool any_query_count = false;

  void validate() const;
};

// Embedding -> one Q-Net per embedding level -> task head. Parameters live in
// one ParamStore under embed.*, qnet.level{i}.* and head.*, where level 0 is
// the finest embedding level.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t init_seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const noexcept { return config_; }
  numerics::ParamStore& store() noexcept { return store_; }
  const numerics::ParamStore& store() const noexcept { return store_; }

  // Randomness of one forward pass (FPS starts, vote queries) is drawn from
  // sample_seed alone.
  embedding::EmbeddingOutput embed(const PointCloud& cloud, std::uint64_t sample_seed) const;
  std::vector<Vec3> select_queries(const PointCloud& cloud, std::uint64_t sample_seed) const;

  // Hierarchical Q-Net features for arbitrary positions, levels concatenated
  // coarse to fine.
  Tensor query_features(const embedding::EmbeddingOutput& support, std::span<const Vec3> queries) const;
  Tensor query_features(const PointCloud& cloud, std::span<const Vec3> queries, std::uint64_t sample_seed) const;

  Tensor head(const Tensor& features, std::span<const Vec3> queries) const;

  // Logits: [1 x classes] for classification, [N x classes] for segmentation.
  Tensor forward(const PointCloud& cloud, std::uint64_t sample_seed) const;

  std::size_t feature_width() const noexcept { return feature_width_; }

 private:
  ModelConfig config_;
  numerics::ParamStore store_;
  std::variant<embedding::PointEmbeddingParams, embedding::VoxelEmbeddingParams> embedding_;
  std::vector<qnet::QNetParams> qnets_;  // index = embedding level
  std::variant<ClassificationHeadParams, SegmentationHeadParams> head_;
  std::size_t feature_width_ = 0;
};

}  // namespace eqnet::tasks
