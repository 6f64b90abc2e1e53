#pragma once

#include <span>
#include <string>

#include "eqnet/geometry/point_cloud.hpp"
#include "eqnet/numerics/layers.hpp"

namespace eqnet::tasks {

using geometry::Vec3;
using numerics::Tensor;

inline constexpr std::size_t kVoteQueries = 16;

enum class VoteMode {
  pooled,    // shared MLP per query, max-pool, then one classifier
  averaged,  // classifier per query, logits averaged
};

VoteMode parse_vote_mode(std::string_view name);
std::string_view vote_mode_name(VoteMode mode);

struct ClassificationHeadConfig {
  std::size_t hidden = 64;
  std::size_t classes = 4;
  VoteMode vote = VoteMode::pooled;
  bool any_query_count = false;  // accept m != 16
  numerics::Activation act = numerics::Activation::gelu;
};

struct ClassificationHeadParams {
  ClassificationHeadConfig config;
  numerics::Mlp mlp;  // (F_Q || (Q - c) / rho || |Q - c| / rho) -> hidden -> hidden
                     // c = centroid, rho = RMS distance to c
  numerics::LinearLayer classifier;

  static ClassificationHeadParams create(numerics::ParamStore& store, const std::string& path,
                                         std::size_t feature_dim, const ClassificationHeadConfig& config);
};

// Logits [1 x classes] from the query features of one object. The rows are
// grouped as a single set, so the result does not depend on their order.
Tensor classification_head(const Tensor& query_features, std::span<const Vec3> queries,
                           const ClassificationHeadParams& params);

struct SegmentationHeadConfig {
  std::size_t hidden = 64;
  std::size_t classes = 3;
  numerics::Activation act = numerics::Activation::gelu;
};

struct SegmentationHeadParams {
  SegmentationHeadConfig config;
  numerics::Mlp mlp;  // feature_dim -> hidden -> classes

  static SegmentationHeadParams create(numerics::ParamStore& store, const std::string& path,
                                       std::size_t feature_dim, const SegmentationHeadConfig& config);
};

// Per-row logits [m x classes].
Tensor segmentation_head(const Tensor& query_features, const SegmentationHeadParams& params);

}  // namespace eqnet::tasks
