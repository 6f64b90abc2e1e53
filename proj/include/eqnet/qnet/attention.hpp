#pragma once

#include <span>
#include <string>
#include <vector>

#include "eqnet/geometry/knn.hpp"
#include "eqnet/geometry/point_cloud.hpp"
#include "eqnet/numerics/layers.hpp"
#include "eqnet/numerics/tensor.hpp"

namespace eqnet::qnet {

using geometry::NeighborTable;
using geometry::Vec3;
using numerics::Tensor;

// Contextual relative positional encoding. Each head owns a two-layer MLP
// (3 -> d_h -> d_h) that embeds the offset (target - source) of a pair; the
// embedding e(i,j) is added to the value of source j (B_v) and dotted with the
// query vector of target i (B_qk = q_i . e(i,j)), so pairs with equal offsets
// still score differently when their queries differ.
struct RpeParams {
  std::vector<numerics::Mlp> heads;

  static RpeParams create(numerics::ParamStore& store, const std::string& path, std::size_t heads,
                          std::size_t head_dim, numerics::Activation act);
  std::size_t head_count() const { return heads.size(); }
  std::size_t head_dim() const { return heads.front().out_features(); }
};

struct AttentionParams {
  Tensor w_q;  // [d x d]
  Tensor w_k;
  Tensor w_v;
  numerics::LinearLayer out;  // [d x d] + bias
  std::size_t heads = 1;

  static AttentionParams create(numerics::ParamStore& store, const std::string& path, std::size_t dim,
                                std::size_t heads);
  std::size_t dim() const { return w_q.shape()[0]; }
};

// Row (i*K + s) holds Y_i - X_{table(i,s)}. Constant (no gradient).
Tensor relative_offsets(std::span<const Vec3> targets, std::span<const Vec3> sources,
                        const NeighborTable& table);

// Per-pair embeddings of all heads side by side: [(m*K) x d], head h in
// columns [h*d_h, (h+1)*d_h). This is B_v.
Tensor relative_embedding(const Tensor& offsets, const RpeParams& rpe);

struct RelativeTerms {
  Tensor qk_bias;      // B_qk, [m x (K*H)], entry (i, s*H + h)
  Tensor value_terms;  // B_v, [(m*K) x d]
};

// B_qk(i,s,h) = q_ih . e_ish and B_v = e for queries q [m x d].
RelativeTerms relative_positional_terms(std::span<const Vec3> targets, std::span<const Vec3> sources,
                                        const NeighborTable& table, const Tensor& queries,
                                        const RpeParams& rpe);

// Fused multi-head attention over a neighbor table given projected
// q [m x d], k [n x d], v [n x d] and pair embeddings e [(m*K) x d]:
//   A(i,s) = softmax_s((q_i . k_j + q_i . e_is) / sqrt(d_h)),  j = table(i,s)
//   out_i  = sum_s A(i,s) (v_j + e_is)
// per head, heads concatenated. Padded slots are excluded from the softmax.
Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& e,
                      const NeighborTable& table, std::size_t heads);

// Attention(Y, F_Y, X, F_X): targets Y with features F_Y [m x d] read from
// sources X with features F_X [n x d]. With a neighbor table each target only
// sees its K listed sources; without one it sees all n.
Tensor attention(std::span<const Vec3> targets, const Tensor& target_features,
                 std::span<const Vec3> sources, const Tensor& source_features,
                 const AttentionParams& params, const RpeParams& rpe,
                 const NeighborTable* neighbors = nullptr);

}  // namespace eqnet::qnet
