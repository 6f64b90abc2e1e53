#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "eqnet/numerics/tensor.hpp"

namespace eqnet::numerics {

// All ops take rank-2 operands ([rows x cols]) unless stated; a rank-1 tensor
// of length n is accepted wherever a [1 x n] row is.

Tensor matmul(const Tensor& a, const Tensor& b);

// x[m x a] * W[a x b] + bias[b]. `bias` may be undefined (no bias term).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

// Scalar reductions over every element.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

enum class Activation { gelu, relu };

Activation parse_activation(std::string_view name);
std::string_view activation_name(Activation act);

// Exact (erf-based) Gaussian error linear unit.
Tensor gelu(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor activate(const Tensor& x, Activation act);

// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Mean over rows of -log softmax(logits)[i, labels[i]].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// Column-wise concatenation of tensors with equal row counts.
Tensor concat_cols(const std::vector<Tensor>& parts);

// out[r] = x[indices[r]]; gradients scatter-add back.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);

// Row groups in compressed form: group g owns rows
// members[offsets[g] .. offsets[g+1]).
struct RowGroups {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> members;

  std::size_t count() const noexcept { return offsets.size() - 1; }
  void add_group(std::span<const std::size_t> rows);
  // Contiguous groups of `width` consecutive rows.
  static RowGroups uniform(std::size_t groups, std::size_t width);
};

// Column-wise max / mean over each group; empty groups are an error.
// Max ties route the gradient to the first member attaining the maximum.
Tensor pool_max(const Tensor& x, const RowGroups& groups);
Tensor pool_mean(const Tensor& x, const RowGroups& groups);

Tensor reshape(const Tensor& x, Shape shape);

}  // namespace eqnet::numerics
