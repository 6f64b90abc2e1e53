#include "eqnet/qnet/attention.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/ops.hpp"

namespace eqnet::qnet {

using numerics::Buffer;
using numerics::shape_string;

RpeParams RpeParams::create(numerics::ParamStore& store, const std::string& path, std::size_t heads,
                            std::size_t head_dim, numerics::Activation act) {
  RpeParams rpe;
  for (std::size_t h = 0; h < heads; ++h) {
    rpe.heads.push_back(numerics::Mlp::create(store, path + ".head" + std::to_string(h), 3,
                                              {head_dim, head_dim}, act, false));
  }
  return rpe;
}

AttentionParams AttentionParams::create(numerics::ParamStore& store, const std::string& path,
                                        std::size_t dim, std::size_t heads) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError(path + ": channel width " + std::to_string(dim) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  AttentionParams p;
  p.w_q = store.create(path + ".w_q", {dim, dim}, numerics::Init::uniform_fan);
  p.w_k = store.create(path + ".w_k", {dim, dim}, numerics::Init::uniform_fan);
  p.w_v = store.create(path + ".w_v", {dim, dim}, numerics::Init::uniform_fan);
  p.out = numerics::LinearLayer::create(store, path + ".out", dim, dim);
  p.heads = heads;
  return p;
}

namespace {

void validate_table(const NeighborTable& table, std::size_t targets, std::size_t sources) {
  if (table.rows != targets) {
    throw DimensionError("neighbor table has " + std::to_string(table.rows) + " rows for " +
                         std::to_string(targets) + " targets");
  }
  if (table.k == 0) throw ContractError("neighbor table with K = 0");
  if (table.k > sources && !table.has_padding()) {
    throw ContractError("neighbor table has K=" + std::to_string(table.k) + " > n=" +
                        std::to_string(sources) + " without padded slots");
  }
  for (auto j : table.index) {
    if (j >= sources) throw ValidationError("neighbor index out of range");
  }
}

}  // namespace

Tensor relative_offsets(std::span<const Vec3> targets, std::span<const Vec3> sources,
                        const NeighborTable& table) {
  validate_table(table, targets.size(), sources.size());
  const std::size_t rows = table.rows * table.k;
  std::vector<double> off(rows * 3);
  for (std::size_t i = 0; i < table.rows; ++i) {
    for (std::size_t s = 0; s < table.k; ++s) {
      const auto& x = sources[table.at(i, s)];
      double* o = off.data() + (i * table.k + s) * 3;
      for (int c = 0; c < 3; ++c) o[c] = targets[i][c] - x[c];
    }
  }
  return Tensor::from({rows, 3}, std::move(off));
}

Tensor relative_embedding(const Tensor& offsets, const RpeParams& rpe) {
  if (rpe.heads.empty()) throw ConfigError("relative positional encoding without heads");
  if (rpe.heads.size() == 1) return rpe.heads.front()(offsets);
  std::vector<Tensor> parts;
  parts.reserve(rpe.heads.size());
  for (const auto& mlp : rpe.heads) parts.push_back(mlp(offsets));
  return numerics::concat_cols(parts);
}

namespace {

// B_qk(i, s*H + h) = q_ih . e_ish
Tensor contextual_bias(const Tensor& q, const Tensor& e, std::size_t k, std::size_t heads) {
  const std::size_t m = q.rows(), d = q.cols(), dh = d / heads;
  auto qv = q.values();
  auto ev = e.values();
  Buffer out(m * k * heads);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t s = 0; s < k; ++s)
      for (std::size_t h = 0; h < heads; ++h) {
        const double* qi = qv.data() + i * d + h * dh;
        const double* es = ev.data() + (i * k + s) * d + h * dh;
        double acc = 0.0;
        for (std::size_t c = 0; c < dh; ++c) acc += qi[c] * es[c];
        out[(i * k + s) * heads + h] = acc;
      }
  return numerics::make_result({m, k * heads}, std::move(out), {q, e},
                               [m, d, dh, k, heads](numerics::detail::Node& o) {
                                 const auto& qv = o.inputs[0]->value;
                                 const auto& ev = o.inputs[1]->value;
                                 auto* gq = numerics::input_grad(o, 0);
                                 auto* ge = numerics::input_grad(o, 1);
                                 for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t s = 0; s < k; ++s)
                                     for (std::size_t h = 0; h < heads; ++h) {
                                       const double g = o.grad[(i * k + s) * heads + h];
                                       const std::size_t qo = i * d + h * dh;
                                       const std::size_t eo = (i * k + s) * d + h * dh;
                                       for (std::size_t c = 0; c < dh; ++c) {
                                         if (gq) gq[qo + c] += g * ev[eo + c];
                                         if (ge) ge[eo + c] += g * qv[qo + c];
                                       }
                                     }
                               });
}

}  // namespace

RelativeTerms relative_positional_terms(std::span<const Vec3> targets, std::span<const Vec3> sources,
                                        const NeighborTable& table, const Tensor& queries,
                                        const RpeParams& rpe) {
  if (queries.rows() != targets.size() || queries.cols() != rpe.head_count() * rpe.head_dim()) {
    throw DimensionError("relative_positional_terms: queries " + shape_string(queries.shape()) +
                         " do not match " + std::to_string(targets.size()) + " targets x " +
                         std::to_string(rpe.head_count() * rpe.head_dim()) + " channels");
  }
  RelativeTerms terms;
  terms.value_terms = relative_embedding(relative_offsets(targets, sources, table), rpe);
  terms.qk_bias = contextual_bias(queries, terms.value_terms, table.k, rpe.head_count());
  return terms;
}

Tensor attention_core(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& e,
                      const NeighborTable& table, std::size_t heads) {
  const std::size_t m = q.rows(), d = q.cols(), n = k.rows(), kk = table.k;
  if (heads == 0 || d % heads != 0) throw DimensionError("attention: width not divisible by heads");
  if (k.cols() != d || v.cols() != d || v.rows() != n) {
    throw DimensionError("attention: q " + shape_string(q.shape()) + ", k " + shape_string(k.shape()) +
                         ", v " + shape_string(v.shape()) + " disagree");
  }
  if (e.rows() != m * kk || e.cols() != d) {
    throw DimensionError("attention: pair embedding " + shape_string(e.shape()) + " expected [" +
                         std::to_string(m * kk) + "x" + std::to_string(d) + "]");
  }
  validate_table(table, m, n);
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  auto qv = q.values();
  auto kv = k.values();
  auto vv = v.values();
  auto ev = e.values();

  // Attention weights, [m x K x H]; kept for the backward pass.
  Buffer weights(m * kk * heads);
  Buffer out(m * d);
  std::vector<double> logits(kk);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t h = 0; h < heads; ++h) {
      const double* qi = qv.data() + i * d + h * dh;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < kk; ++s) {
        if (table.is_padded(i, s)) continue;
        const double* kj = kv.data() + table.at(i, s) * d + h * dh;
        const double* es = ev.data() + (i * kk + s) * d + h * dh;
        double acc = 0.0;
        for (std::size_t c = 0; c < dh; ++c) acc += qi[c] * (kj[c] + es[c]);
        logits[s] = acc * inv_sqrt;
        mx = std::max(mx, logits[s]);
      }
      double z = 0.0;
      for (std::size_t s = 0; s < kk; ++s) {
        const double a = table.is_padded(i, s) ? 0.0 : std::exp(logits[s] - mx);
        weights[(i * kk + s) * heads + h] = a;
        z += a;
      }
      double* oi = out.data() + i * d + h * dh;
      for (std::size_t s = 0; s < kk; ++s) {
        double& a = weights[(i * kk + s) * heads + h];
        a /= z;
        if (a == 0.0) continue;
        const double* vj = vv.data() + table.at(i, s) * d + h * dh;
        const double* es = ev.data() + (i * kk + s) * d + h * dh;
        for (std::size_t c = 0; c < dh; ++c) oi[c] += a * (vj[c] + es[c]);
      }
    }
  }

  return numerics::make_result(
      {m, d}, std::move(out), {q, k, v, e},
      [m, d, dh, kk, heads, inv_sqrt, table = std::make_shared<NeighborTable>(table),
       weights = std::move(weights)](numerics::detail::Node& o) {
        const auto& qv = o.inputs[0]->value;
        const auto& kv = o.inputs[1]->value;
        const auto& vv = o.inputs[2]->value;
        const auto& ev = o.inputs[3]->value;
        auto* gq = numerics::input_grad(o, 0);
        auto* gk = numerics::input_grad(o, 1);
        auto* gv = numerics::input_grad(o, 2);
        auto* ge = numerics::input_grad(o, 3);
        std::vector<double> dlogit(kk);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t h = 0; h < heads; ++h) {
            const double* go = o.grad.data() + i * d + h * dh;
            const double* qi = qv.data() + i * d + h * dh;
            double dot = 0.0;
            for (std::size_t s = 0; s < kk; ++s) {
              const double a = weights[(i * kk + s) * heads + h];
              if (a == 0.0) {
                dlogit[s] = 0.0;
                continue;
              }
              const std::size_t j = table->at(i, s);
              const double* vj = vv.data() + j * d + h * dh;
              const double* es = ev.data() + (i * kk + s) * d + h * dh;
              double da = 0.0;
              for (std::size_t c = 0; c < dh; ++c) da += go[c] * (vj[c] + es[c]);
              dlogit[s] = da;
              dot += a * da;
            }
            for (std::size_t s = 0; s < kk; ++s) {
              const double a = weights[(i * kk + s) * heads + h];
              if (a == 0.0) continue;
              const std::size_t j = table->at(i, s);
              const double dl = a * (dlogit[s] - dot) * inv_sqrt;
              const std::size_t jo = j * d + h * dh;
              const std::size_t eo = (i * kk + s) * d + h * dh;
              const std::size_t qo = i * d + h * dh;
              for (std::size_t c = 0; c < dh; ++c) {
                if (gq) gq[qo + c] += dl * (kv[jo + c] + ev[eo + c]);
                if (gk) gk[jo + c] += dl * qi[c];
                if (gv) gv[jo + c] += a * go[c];
                if (ge) ge[eo + c] += dl * qi[c] + a * go[c];
              }
            }
          }
        }
      });
}

Tensor attention(std::span<const Vec3> targets, const Tensor& target_features,
                 std::span<const Vec3> sources, const Tensor& source_features,
                 const AttentionParams& params, const RpeParams& rpe, const NeighborTable* neighbors) {
  const std::size_t d = params.dim();
  if (target_features.cols() != d || source_features.cols() != d) {
    throw DimensionError("attention: feature widths " + shape_string(target_features.shape()) + " and " +
                         shape_string(source_features.shape()) + " vs model width " + std::to_string(d));
  }
  if (target_features.rows() != targets.size() || source_features.rows() != sources.size()) {
    throw DimensionError("attention: feature rows do not match position counts");
  }
  if (sources.empty()) throw ValidationError("attention: no source points");
  if (rpe.head_count() != params.heads || rpe.head_count() * rpe.head_dim() != d) {
    throw DimensionError("attention: positional encoding heads do not match attention heads");
  }
  NeighborTable global;
  if (!neighbors) {
    global = NeighborTable::all_pairs(targets.size(), sources.size());
    neighbors = &global;
  }
  const Tensor q = numerics::matmul(target_features, params.w_q);
  const Tensor k = numerics::matmul(source_features, params.w_k);
  const Tensor v = numerics::matmul(source_features, params.w_v);
  const Tensor e = relative_embedding(relative_offsets(targets, sources, *neighbors), rpe);
  return params.out(attention_core(q, k, v, e, *neighbors, params.heads));
}

}  // namespace eqnet::qnet
