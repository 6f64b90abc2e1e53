#include "eqnet/tasks/heads.hpp"

#include <cmath>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/ops.hpp"

namespace eqnet::tasks {

VoteMode parse_vote_mode(std::string_view name) {
  if (name == "pooled") return VoteMode::pooled;
  if (name == "averaged") return VoteMode::averaged;
  throw ConfigError("unknown vote mode '" + std::string(name) + "' (expected pooled or averaged)");
}

std::string_view vote_mode_name(VoteMode mode) { return mode == VoteMode::pooled ? "pooled" : "averaged"; }

ClassificationHeadParams ClassificationHeadParams::create(numerics::ParamStore& store, const std::string& path,
                                                          std::size_t feature_dim,
                                                          const ClassificationHeadConfig& config) {
  if (config.classes < 2) throw ConfigError("classification head needs at least 2 classes");
  if (config.hidden == 0) throw ConfigError("classification head hidden width must be positive");
  ClassificationHeadParams p;
  p.config = config;
  p.mlp = numerics::Mlp::create(store, path + ".mlp", feature_dim + 4, {config.hidden, config.hidden}, config.act,
                                true);
  p.classifier = numerics::LinearLayer::create(store, path + ".classifier", config.hidden, config.classes);
  return p;
}

Tensor classification_head(const Tensor& query_features, std::span<const Vec3> queries,
                           const ClassificationHeadParams& params) {
  const std::size_t m = queries.size();
  if (query_features.rows() != m) {
    throw DimensionError("classification head: " + std::to_string(query_features.rows()) + " feature rows for " +
                         std::to_string(m) + " queries");
  }
  if (m == 0) throw ValidationError("classification head: no queries");
  if (m != kVoteQueries && !params.config.any_query_count) {
    throw ContractError("classification head expects " + std::to_string(kVoteQueries) + " vote queries, got " +
                        std::to_string(m));
  }
  Vec3 centroid{};
  for (const auto& q : queries)
    for (int c = 0; c < 3; ++c) centroid[c] += q[c];
  for (auto& c : centroid) c /= static_cast<double>(m);
  // Offset to the centroid and its length, both divided by the RMS radius of
  // the query set so the head sees shape rather than size.
  std::vector<double> rel(m * 4);
  double ms = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      rel[i * 4 + c] = queries[i][c] - centroid[c];
      r2 += rel[i * 4 + c] * rel[i * 4 + c];
    }
    rel[i * 4 + 3] = std::sqrt(r2);
    ms += r2;
  }
  const double rho = std::sqrt(ms / static_cast<double>(m));
  if (rho > 0)
    for (auto& v : rel) v /= rho;
  const Tensor input = numerics::concat_cols({query_features, Tensor::from({m, 4}, std::move(rel))});
  const Tensor hidden = params.mlp(input);
  const auto group = numerics::RowGroups::uniform(1, m);
  if (params.config.vote == VoteMode::pooled) return params.classifier(numerics::pool_max(hidden, group));
  return numerics::pool_mean(params.classifier(hidden), group);
}

SegmentationHeadParams SegmentationHeadParams::create(numerics::ParamStore& store, const std::string& path,
                                                      std::size_t feature_dim, const SegmentationHeadConfig& config) {
  if (config.classes < 2) throw ConfigError("segmentation head needs at least 2 classes");
  if (config.hidden == 0) throw ConfigError("segmentation head hidden width must be positive");
  SegmentationHeadParams p;
  p.config = config;
  p.mlp = numerics::Mlp::create(store, path + ".mlp", feature_dim, {config.hidden, config.classes}, config.act, false);
  return p;
}

Tensor segmentation_head(const Tensor& query_features, const SegmentationHeadParams& params) {
  if (query_features.cols() != params.mlp.layers.front().in_features()) {
    throw DimensionError("segmentation head: feature width " + std::to_string(query_features.cols()) +
                         ", expected " + std::to_string(params.mlp.layers.front().in_features()));
  }
  return params.mlp(query_features);
}

}  // namespace eqnet::tasks
