#include "eqnet/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "eqnet/errors.hpp"

namespace eqnet::numerics {

namespace {

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims dims2(const Tensor& t, const char* op) {
  const auto& s = t.shape();
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " + shape_string(s));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

// c[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c[m x k] += g[m x n] * b[k x n]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t n,
             std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* gi = g + i * n;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * n;
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += gi[j] * bp[j];
      ci[p] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * g[m x n]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += aip * gi[j];
    }
  }
}

template <typename Fwd, typename Deriv>
Tensor unary_map(const Tensor& x, Fwd fwd, Deriv deriv) {
  auto in = x.values();
  Buffer out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [deriv](detail::Node& o) {
    auto* gx = input_grad(o, 0);
    if (!gx) return;
    const auto& xv = o.inputs[0]->value;
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += o.grad[i] * deriv(xv[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto [m, k] = dims2(a, "matmul");
  const auto [k2, n] = dims2(b, "matmul");
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Buffer out(m * n);
  gemm_nn(a.values().data(), b.values().data(), out.data(), m, k, n);
  return make_result({m, n}, std::move(out), {a, b}, [m = m, k = k, n = n](detail::Node& o) {
    const auto& av = o.inputs[0]->value;
    const auto& bv = o.inputs[1]->value;
    if (auto* ga = input_grad(o, 0)) gemm_nt(o.grad.data(), bv.data(), ga, m, n, k);
    if (auto* gb = input_grad(o, 1)) gemm_tn(av.data(), o.grad.data(), gb, m, k, n);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const auto [m, a] = dims2(x, "linear");
  const auto [a2, b] = dims2(weight, "linear");
  if (a != a2) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                         shape_string(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.size() != b) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) + " incompatible with weight " +
                         shape_string(weight.shape()));
  }
  Buffer out(m * b);
  if (has_bias) {
    auto bv = bias.values();
    for (std::size_t i = 0; i < m; ++i) std::copy(bv.begin(), bv.end(), out.data() + i * b);
  }
  gemm_nn(x.values().data(), weight.values().data(), out.data(), m, a, b);
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result({m, b}, std::move(out), inputs,
                     [m = m, a = a, b = b, has_bias](detail::Node& o) {
                       const auto& xv = o.inputs[0]->value;
                       const auto& wv = o.inputs[1]->value;
                       if (auto* gx = input_grad(o, 0)) gemm_nt(o.grad.data(), wv.data(), gx, m, b, a);
                       if (auto* gw = input_grad(o, 1)) gemm_tn(xv.data(), o.grad.data(), gw, m, a, b);
                       if (has_bias) {
                         if (auto* gb = input_grad(o, 2)) {
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < b; ++j) gb[j] += o.grad[i * b + j];
                         }
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto av = a.values();
  auto bv = b.values();
  Buffer out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& o) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* g = input_grad(o, k))
        for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto av = a.values();
  auto bv = b.values();
  Buffer out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& o) {
    if (auto* g = input_grad(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
    if (auto* g = input_grad(o, 1))
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] -= o.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto av = a.values();
  auto bv = b.values();
  Buffer out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& o) {
    const auto& av = o.inputs[0]->value;
    const auto& bv = o.inputs[1]->value;
    if (auto* g = input_grad(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * bv[i];
    if (auto* g = input_grad(o, 1))
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * av[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  auto av = a.values();
  Buffer out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return make_result(a.shape(), std::move(out), {a}, [factor](detail::Node& o) {
    if (auto* g = input_grad(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i] * factor;
  });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return make_result({1}, Buffer(std::vector<double>{acc}), {a}, [](detail::Node& o) {
    if (auto* g = input_grad(o, 0)) {
      const double s = o.grad[0];
      for (std::size_t i = 0; i < o.inputs[0]->value.size(); ++i) g[i] += s;
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Activation parse_activation(std::string_view name) {
  if (name == "gelu") return Activation::gelu;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected gelu or relu)");
}

std::string_view activation_name(Activation act) {
  return act == Activation::gelu ? "gelu" : "relu";
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return unary_map(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [](double v) {
        return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Tensor relu(const Tensor& x) {
  return unary_map(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor activate(const Tensor& x, Activation act) {
  return act == Activation::gelu ? gelu(x) : relu(x);
}

Tensor softmax_rows(const Tensor& x) {
  const auto [m, n] = dims2(x, "softmax_rows");
  if (n == 0) throw DimensionError("softmax_rows: empty row dimension");
  auto xv = x.values();
  Buffer out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double* orow = out.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (orow[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) orow[j] /= z;
  }
  return make_result(x.shape(), std::move(out), {x}, [m = m, n = n](detail::Node& o) {
    auto* gx = input_grad(o, 0);
    if (!gx) return;
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = o.value.data() + i * n;
      const double* gy = o.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto [m, d] = dims2(x, "layer_norm");
  if (d == 0) throw DimensionError("layer_norm: empty feature dimension");
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layer_norm: input " + shape_string(x.shape()) + " vs gamma " +
                         shape_string(gamma.shape()) + ", beta " + shape_string(beta.shape()));
  }
  if (!(eps > 0.0)) throw ValidationError("layer_norm: eps must be positive");
  auto xv = x.values();
  auto gv = gamma.values();
  auto bv = beta.values();
  Buffer out(m * d);
  std::vector<double> normed(m * d);
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * is;
      normed[i * d + j] = h;
      out[i * d + j] = gv[j] * h + bv[j];
    }
  }
  return make_result(
      x.shape(), std::move(out), {x, gamma, beta},
      [m = m, d = d, normed = std::move(normed), inv_std = std::move(inv_std)](detail::Node& o) {
        const auto& gv = o.inputs[1]->value;
        auto* gx = input_grad(o, 0);
        auto* gg = input_grad(o, 1);
        auto* gb = input_grad(o, 2);
        std::vector<double> dh(d);
        for (std::size_t i = 0; i < m; ++i) {
          const double* gy = o.grad.data() + i * d;
          const double* h = normed.data() + i * d;
          if (gg)
            for (std::size_t j = 0; j < d; ++j) gg[j] += gy[j] * h[j];
          if (gb)
            for (std::size_t j = 0; j < d; ++j) gb[j] += gy[j];
          if (!gx) continue;
          double mean_dh = 0.0;
          double mean_dh_h = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            dh[j] = gy[j] * gv[j];
            mean_dh += dh[j];
            mean_dh_h += dh[j] * h[j];
          }
          mean_dh /= static_cast<double>(d);
          mean_dh_h /= static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j)
            gx[i * d + j] += inv_std[i] * (dh[j] - mean_dh - h[j] * mean_dh_h);
        }
      });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const auto [m, c] = dims2(logits, "cross_entropy");
  if (labels.size() != m) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(m) + " rows");
  }
  if (c == 0 || m == 0) throw DimensionError("cross_entropy: empty logits");
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw ValidationError("cross_entropy: label " + std::to_string(labels[i]) + " at row " +
                            std::to_string(i) + " outside [0, " + std::to_string(c) + ")");
    }
  }
  auto lv = logits.values();
  std::vector<double> probs(m * c);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = lv.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (probs[i * c + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
    total += std::log(z) + mx - row[labels[i]];
  }
  std::vector<int> lab(labels.begin(), labels.end());
  return make_result({1}, Buffer(std::vector<double>{total / static_cast<double>(m)}), {logits},
                     [m = m, c = c, probs = std::move(probs), lab = std::move(lab)](detail::Node& o) {
                       auto* g = input_grad(o, 0);
                       if (!g) return;
                       const double s = o.grad[0] / static_cast<double>(m);
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t j = 0; j < c; ++j) g[i * c + j] += s * probs[i * c + j];
                         g[i * c + lab[i]] -= s;
                       }
                     });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = dims2(parts[0], "concat_cols").rows;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto d = dims2(p, "concat_cols");
    if (d.rows != m) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(parts[0].shape()) + " vs " +
                           shape_string(p.shape()));
    }
    widths.push_back(d.cols);
    total += d.cols;
  }
  Buffer out(m * total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(v.data() + i * widths[k], widths[k], out.data() + i * total + off);
    off += widths[k];
  }
  return make_result({m, total}, std::move(out), parts,
                     [m, total, widths = std::move(widths)](detail::Node& o) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (auto* g = input_grad(o, k)) {
                           for (std::size_t i = 0; i < m; ++i)
                             for (std::size_t j = 0; j < widths[k]; ++j)
                               g[i * widths[k] + j] += o.grad[i * total + off + j];
                         }
                         off += widths[k];
                       }
                     });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  const auto [n, d] = dims2(x, "gather_rows");
  auto xv = x.values();
  Buffer out(indices.size() * d);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= n) {
      throw ValidationError("gather_rows: index " + std::to_string(indices[r]) + " >= " +
                            std::to_string(n));
    }
    std::copy_n(xv.data() + indices[r] * d, d, out.data() + r * d);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return make_result({idx.size(), d}, std::move(out), {x}, [d = d, idx](detail::Node& o) {
    auto* g = input_grad(o, 0);
    if (!g) return;
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) g[idx[r] * d + j] += o.grad[r * d + j];
  });
}

void RowGroups::add_group(std::span<const std::size_t> rows) {
  members.insert(members.end(), rows.begin(), rows.end());
  offsets.push_back(members.size());
}

RowGroups RowGroups::uniform(std::size_t groups, std::size_t width) {
  RowGroups g;
  g.offsets.resize(groups + 1);
  g.members.resize(groups * width);
  for (std::size_t i = 0; i <= groups; ++i) g.offsets[i] = i * width;
  for (std::size_t r = 0; r < groups * width; ++r) g.members[r] = r;
  return g;
}

namespace {

void validate_groups(const RowGroups& groups, std::size_t rows, const char* op) {
  if (groups.offsets.empty() || groups.offsets.front() != 0 ||
      groups.offsets.back() != groups.members.size()) {
    throw ValidationError(std::string(op) + ": malformed row groups");
  }
  for (std::size_t g = 0; g < groups.count(); ++g) {
    if (groups.offsets[g + 1] <= groups.offsets[g]) {
      throw ValidationError(std::string(op) + ": group " + std::to_string(g) + " is empty");
    }
  }
  for (auto r : groups.members) {
    if (r >= rows) throw ValidationError(std::string(op) + ": member row out of range");
  }
}

}  // namespace

Tensor pool_max(const Tensor& x, const RowGroups& groups) {
  const auto [n, d] = dims2(x, "pool_max");
  validate_groups(groups, n, "pool_max");
  const std::size_t gcount = groups.count();
  auto xv = x.values();
  Buffer out(gcount * d);
  std::vector<std::size_t> argmax(gcount * d);
  for (std::size_t g = 0; g < gcount; ++g) {
    for (std::size_t j = 0; j < d; ++j) {
      std::size_t best = groups.members[groups.offsets[g]];
      double bv = xv[best * d + j];
      for (std::size_t t = groups.offsets[g] + 1; t < groups.offsets[g + 1]; ++t) {
        const std::size_t r = groups.members[t];
        if (xv[r * d + j] > bv) {
          bv = xv[r * d + j];
          best = r;
        }
      }
      out[g * d + j] = bv;
      argmax[g * d + j] = best;
    }
  }
  return make_result({gcount, d}, std::move(out), {x},
                     [d = d, argmax = std::move(argmax)](detail::Node& o) {
                       auto* gx = input_grad(o, 0);
                       if (!gx) return;
                       for (std::size_t k = 0; k < argmax.size(); ++k)
                         gx[argmax[k] * d + k % d] += o.grad[k];
                     });
}

Tensor pool_mean(const Tensor& x, const RowGroups& groups) {
  const auto [n, d] = dims2(x, "pool_mean");
  validate_groups(groups, n, "pool_mean");
  const std::size_t gcount = groups.count();
  auto xv = x.values();
  Buffer out(gcount * d);
  for (std::size_t g = 0; g < gcount; ++g) {
    const double inv = 1.0 / static_cast<double>(groups.offsets[g + 1] - groups.offsets[g]);
    for (std::size_t t = groups.offsets[g]; t < groups.offsets[g + 1]; ++t) {
      const double* row = xv.data() + groups.members[t] * d;
      for (std::size_t j = 0; j < d; ++j) out[g * d + j] += row[j];
    }
    for (std::size_t j = 0; j < d; ++j) out[g * d + j] *= inv;
  }
  return make_result({gcount, d}, std::move(out), {x}, [d = d, groups](detail::Node& o) {
    auto* gx = input_grad(o, 0);
    if (!gx) return;
    for (std::size_t g = 0; g < groups.count(); ++g) {
      const double inv = 1.0 / static_cast<double>(groups.offsets[g + 1] - groups.offsets[g]);
      for (std::size_t t = groups.offsets[g]; t < groups.offsets[g + 1]; ++t)
        for (std::size_t j = 0; j < d; ++j) gx[groups.members[t] * d + j] += o.grad[g * d + j] * inv;
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  Buffer out(std::vector<double>(x.values().begin(), x.values().end()));
  return make_result(std::move(shape), std::move(out), {x}, [](detail::Node& o) {
    if (auto* g = input_grad(o, 0))
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
  });
}

}  // namespace eqnet::numerics
