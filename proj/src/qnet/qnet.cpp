#include "eqnet/qnet/qnet.hpp"

#include "eqnet/errors.hpp"
#include "eqnet/numerics/ops.hpp"

namespace eqnet::qnet {

using numerics::add;

void SupportSet::validate(std::size_t dim) const {
  if (points.empty()) throw ValidationError("support set is empty");
  if (features.rows() != points.size() || features.cols() != dim) {
    throw DimensionError("support level " + std::to_string(level) + ": features " +
                         numerics::shape_string(features.shape()) + " for " + std::to_string(points.size()) +
                         " points at width " + std::to_string(dim));
  }
}

void QNetConfig::validate() const {
  if (dim == 0) throw ConfigError("qnet: width must be positive");
  if (blocks == 0) throw ConfigError("qnet: at least one block is required");
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("qnet: width " + std::to_string(dim) + " not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (ffn_mult == 0) throw ConfigError("qnet: ffn multiplier must be positive");
}

LayerParams LayerParams::create(numerics::ParamStore& store, const std::string& path, const QNetConfig& cfg) {
  return LayerParams{
      AttentionParams::create(store, path + ".attn", cfg.dim, cfg.heads),
      numerics::FeedForward::create(store, path + ".ffn", cfg.dim, cfg.dim * cfg.ffn_mult, cfg.act),
      numerics::LayerNormLayer::create(store, path + ".norm_attn", cfg.dim),
      numerics::LayerNormLayer::create(store, path + ".norm_ffn", cfg.dim),
  };
}

QNetParams QNetParams::create(numerics::ParamStore& store, const std::string& path, const QNetConfig& cfg) {
  cfg.validate();
  QNetParams p;
  p.config = cfg;
  p.rpe = RpeParams::create(store, path + ".rpe", cfg.heads, cfg.dim / cfg.heads, cfg.act);
  for (std::size_t l = 0; l < cfg.blocks; ++l) {
    const std::string block = path + ".block" + std::to_string(l);
    QBlockParams b{std::nullopt, LayerParams::create(store, block + ".decoder", cfg)};
    if (l + 1 < cfg.blocks) b.encoder = LayerParams::create(store, block + ".encoder", cfg);
    p.blocks.push_back(std::move(b));
  }
  return p;
}

Tensor q_encoder_layer(std::span<const Vec3> support, const Tensor& support_features,
                       const LayerParams& params, const RpeParams& rpe, const NeighborTable* neighbors) {
  const Tensor normed = params.norm_attn(support_features);
  const Tensor mid =
      add(attention(support, normed, support, normed, params.attn, rpe, neighbors), support_features);
  return add(params.ffn(params.norm_ffn(mid)), mid);
}

Tensor q_decoder_layer(std::span<const Vec3> queries, const Tensor& query_features,
                       std::span<const Vec3> support, const Tensor& support_features,
                       const LayerParams& params, const RpeParams& rpe, const NeighborTable* neighbors) {
  const Tensor mid = add(attention(queries, params.norm_attn(query_features), support,
                                   params.norm_attn(support_features), params.attn, rpe, neighbors),
                         query_features);
  return add(params.ffn(params.norm_ffn(mid)), mid);
}

NeighborTables build_neighbor_tables(std::span<const Vec3> queries, std::span<const Vec3> support,
                                     const QNetConfig& cfg) {
  NeighborTables t;
  if (cfg.neighbors == 0) return t;
  t.support_support = geometry::k_nearest_neighbors(support, support, cfg.neighbors);
  t.query_support = geometry::k_nearest_neighbors(queries, support, cfg.neighbors);
  return t;
}

QBlockOutput q_block(std::span<const Vec3> queries, const Tensor& query_features,
                     std::span<const Vec3> support, const Tensor& support_features,
                     const QBlockParams& params, const RpeParams& rpe, bool is_last,
                     const NeighborTables& tables) {
  if (query_features.cols() != support_features.cols()) {
    throw DimensionError("q_block: query width " + std::to_string(query_features.cols()) +
                         " != support width " + std::to_string(support_features.cols()));
  }
  QBlockOutput out;
  out.query_features =
      q_decoder_layer(queries, query_features, support, support_features, params.decoder, rpe,
                      tables.query_support ? &*tables.query_support : nullptr);
  if (!is_last) {
    if (!params.encoder) throw ContractError("q_block: non-final block has no encoder");
    out.support_features = q_encoder_layer(support, support_features, *params.encoder, rpe,
                                           tables.support_support ? &*tables.support_support : nullptr);
  }
  return out;
}

Tensor q_net_forward(std::span<const Vec3> queries, const SupportSet& support, const QNetParams& params) {
  params.config.validate();
  support.validate(params.config.dim);
  if (queries.empty()) throw ValidationError("q_net_forward: no query positions");
  const auto tables = build_neighbor_tables(queries, support.points, params.config);
  Tensor fq = Tensor::zeros({queries.size(), params.config.dim});
  Tensor fs = support.features;
  for (std::size_t l = 0; l < params.blocks.size(); ++l) {
    const bool last = l + 1 == params.blocks.size();
    auto out = q_block(queries, fq, support.points, fs, params.blocks[l], params.rpe, last, tables);
    fq = std::move(out.query_features);
    if (out.support_features) fs = std::move(*out.support_features);
  }
  return fq;
}

Tensor hierarchical_q_net_forward(std::span<const Vec3> queries, std::span<const SupportSet> levels,
                                  std::span<const QNetParams> params) {
  if (levels.empty()) throw ConfigError("hierarchical Q-Net needs at least one support level");
  if (levels.size() != params.size()) {
    throw ConfigError("hierarchical Q-Net: " + std::to_string(levels.size()) + " levels but " +
                      std::to_string(params.size()) + " parameter sets");
  }
  std::vector<Tensor> parts;
  parts.reserve(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) parts.push_back(q_net_forward(queries, levels[i], params[i]));
  return parts.size() == 1 ? parts.front() : numerics::concat_cols(parts);
}

}  // namespace eqnet::qnet
