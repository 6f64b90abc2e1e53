#include "eqnet/tasks/model.hpp"

#include "eqnet/errors.hpp"
#include "eqnet/geometry/query_selection.hpp"
#include "eqnet/numerics/rng.hpp"

namespace eqnet::tasks {

TaskKind parse_task(std::string_view name) {
  if (name == "classification") return TaskKind::classification;
  if (name == "segmentation") return TaskKind::segmentation;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected classification or segmentation)");
}

std::string_view task_name(TaskKind t) {
  return t == TaskKind::classification ? "classification" : "segmentation";
}

EmbeddingKind parse_embedding(std::string_view name) {
  if (name == "point") return EmbeddingKind::point;
  if (name == "voxel") return EmbeddingKind::voxel;
  throw ConfigError("unknown embedding '" + std::string(name) + "' (expected point or voxel)");
}

std::string_view embedding_name(EmbeddingKind e) { return e == EmbeddingKind::point ? "point" : "voxel"; }

void ModelConfig::validate() const {
  if (classes < 2) throw ConfigError("model: at least 2 classes required");
  if (embedding == EmbeddingKind::point) point.validate();
  else voxel.validate();
  if (qnet.blocks == 0) throw ConfigError("qnet: at least one block is required");
  if (qnet.heads == 0) throw ConfigError("qnet: at least one head is required");
  if (task == TaskKind::classification && vote_queries != kVoteQueries && !any_query_count) {
    throw ConfigError("model: vote_queries other than 16 requires any_query_count");
  }
  if (vote_queries == 0) throw ConfigError("model: vote_queries must be positive");
}

Model::Model(const ModelConfig& config, std::uint64_t init_seed) : config_(config), store_(init_seed) {
  config_.validate();
  std::vector<std::size_t> widths;
  if (config_.embedding == EmbeddingKind::point) {
    auto p = embedding::PointEmbeddingParams::create(store_, "embed", config_.point, config_.attribute_dim);
    widths = p.level_widths();
    embedding_ = std::move(p);
  } else {
    auto p = embedding::VoxelEmbeddingParams::create(store_, "embed", config_.voxel, config_.attribute_dim);
    widths = p.level_widths();
    embedding_ = std::move(p);
  }
  for (std::size_t l = 0; l < widths.size(); ++l) {
    auto qc = config_.qnet;
    qc.dim = widths[l];
    qnets_.push_back(qnet::QNetParams::create(store_, "qnet.level" + std::to_string(l), qc));
    feature_width_ += widths[l];
  }
  if (config_.task == TaskKind::classification) {
    ClassificationHeadConfig hc;
    hc.hidden = config_.head_hidden;
    hc.classes = config_.classes;
    hc.vote = config_.vote;
    hc.any_query_count = config_.any_query_count;
    hc.act = config_.qnet.act;
    head_ = ClassificationHeadParams::create(store_, "head", feature_width_, hc);
  } else {
    SegmentationHeadConfig hc;
    hc.hidden = config_.head_hidden;
    hc.classes = config_.classes;
    hc.act = config_.qnet.act;
    head_ = SegmentationHeadParams::create(store_, "head", feature_width_, hc);
  }
}

embedding::EmbeddingOutput Model::embed(const PointCloud& cloud, std::uint64_t sample_seed) const {
  const auto seed = derive_seed(sample_seed, "embed");
  if (const auto* p = std::get_if<embedding::PointEmbeddingParams>(&embedding_))
    return embedding::point_embedding_forward(cloud, *p, seed);
  return embedding::voxel_embedding_forward(cloud, std::get<embedding::VoxelEmbeddingParams>(embedding_), seed);
}

std::vector<Vec3> Model::select_queries(const PointCloud& cloud, std::uint64_t sample_seed) const {
  if (config_.task == TaskKind::segmentation) return cloud.positions;
  geometry::QueryParams qp;
  qp.count = config_.vote_queries;
  const auto strategy = config_.vote_queries == geometry::kObjectVoteCount ? geometry::QueryStrategy::object_votes
                                                                           : geometry::QueryStrategy::fps_subsample;
  return geometry::select_query_positions(cloud, strategy, qp, derive_seed(sample_seed, "query")).positions;
}

Tensor Model::query_features(const embedding::EmbeddingOutput& support, std::span<const Vec3> queries) const {
  if (support.levels.size() != qnets_.size()) {
    throw ContractError("model: embedding produced " + std::to_string(support.levels.size()) + " levels, expected " +
                        std::to_string(qnets_.size()));
  }
  // Coarse to fine.
  std::vector<qnet::SupportSet> levels(support.levels.rbegin(), support.levels.rend());
  std::vector<qnet::QNetParams> params(qnets_.rbegin(), qnets_.rend());
  return qnet::hierarchical_q_net_forward(queries, levels, params);
}

Tensor Model::query_features(const PointCloud& cloud, std::span<const Vec3> queries,
                             std::uint64_t sample_seed) const {
  return query_features(embed(cloud, sample_seed), queries);
}

Tensor Model::head(const Tensor& features, std::span<const Vec3> queries) const {
  if (const auto* c = std::get_if<ClassificationHeadParams>(&head_)) return classification_head(features, queries, *c);
  return segmentation_head(features, std::get<SegmentationHeadParams>(head_));
}

Tensor Model::forward(const PointCloud& cloud, std::uint64_t sample_seed) const {
  const auto queries = select_queries(cloud, sample_seed);
  return head(query_features(cloud, queries, sample_seed), queries);
}

}  // namespace eqnet::tasks
