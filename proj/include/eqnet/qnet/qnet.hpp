#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqnet/numerics/layers.hpp"
#include "eqnet/qnet/attention.hpp"

namespace eqnet::qnet {

struct SupportSet {
  std::vector<Vec3> points;  // S, n x 3
  Tensor features;           // F_S, [n x d]
  int level = 0;

  void validate(std::size_t dim) const;
};

struct QNetConfig {
  std::size_t dim = 32;
  std::size_t blocks = 3;  // L
  std::size_t heads = 2;
  // Neighborhood size of local attention; 0 selects global attention.
  std::size_t neighbors = 16;
  std::size_t ffn_mult = 2;
  numerics::Activation act = numerics::Activation::gelu;

  void validate() const;
};

// Attention + FFN with a layernorm in front of each. The encoder normalizes its
// single input once; the decoder applies the same pre-attention norm to both
// the query and the support features.
struct LayerParams {
  AttentionParams attn;
  numerics::FeedForward ffn;
  numerics::LayerNormLayer norm_attn;
  numerics::LayerNormLayer norm_ffn;

  static LayerParams create(numerics::ParamStore& store, const std::string& path, const QNetConfig& cfg);
};

struct QBlockParams {
  std::optional<LayerParams> encoder;  // absent in the last block
  LayerParams decoder;
};

struct QNetParams {
  QNetConfig config;
  RpeParams rpe;  // shared by every attention of this Q-Net
  std::vector<QBlockParams> blocks;

  // Parameters live under `<path>.block{l}.{encoder|decoder}` and `<path>.rpe`.
  static QNetParams create(numerics::ParamStore& store, const std::string& path, const QNetConfig& cfg);
};

// F' = Attn(S, LN(F_S), S, LN(F_S)) + F_S;  out = FFN(LN(F')) + F'
Tensor q_encoder_layer(std::span<const Vec3> support, const Tensor& support_features,
                       const LayerParams& params, const RpeParams& rpe,
                       const NeighborTable* neighbors = nullptr);

// F' = Attn(Q, LN(F_Q), S, LN(F_S)) + F_Q;  out = FFN(LN(F')) + F'
Tensor q_decoder_layer(std::span<const Vec3> queries, const Tensor& query_features,
                       std::span<const Vec3> support, const Tensor& support_features,
                       const LayerParams& params, const RpeParams& rpe,
                       const NeighborTable* neighbors = nullptr);

struct QBlockOutput {
  Tensor query_features;
  std::optional<Tensor> support_features;
};

struct NeighborTables {
  std::optional<NeighborTable> support_support;  // encoder self-attention
  std::optional<NeighborTable> query_support;    // decoder cross-attention
};

// Tables for local attention; both empty when cfg selects global attention.
NeighborTables build_neighbor_tables(std::span<const Vec3> queries, std::span<const Vec3> support,
                                     const QNetConfig& cfg);

QBlockOutput q_block(std::span<const Vec3> queries, const Tensor& query_features,
                     std::span<const Vec3> support, const Tensor& support_features,
                     const QBlockParams& params, const RpeParams& rpe, bool is_last,
                     const NeighborTables& tables = {});

// F_Q^0 = 0, then L Q-Blocks; returns F_Q^L [m x d].
Tensor q_net_forward(std::span<const Vec3> queries, const SupportSet& support, const QNetParams& params);

// One Q-Net per level, outputs concatenated along channels in list order.
// Callers pass levels coarse to fine.
Tensor hierarchical_q_net_forward(std::span<const Vec3> queries, std::span<const SupportSet> levels,
                                  std::span<const QNetParams> params);

}  // namespace eqnet::qnet
