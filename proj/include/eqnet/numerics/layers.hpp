#pragma once

#include <string>
#include <vector>

#include "eqnet/numerics/ops.hpp"
#include "eqnet/numerics/param_store.hpp"

namespace eqnet::numerics {

struct LinearLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out], undefined when the layer has no bias

  static LinearLayer create(ParamStore& store, const std::string& path, std::size_t in,
                            std::size_t out, bool with_bias = true);
  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  std::size_t in_features() const { return weight.shape()[0]; }
  std::size_t out_features() const { return weight.shape()[1]; }
};

struct LayerNormLayer {
  Tensor gamma;
  Tensor beta;
  double eps = 1e-5;

  static LayerNormLayer create(ParamStore& store, const std::string& path, std::size_t dim);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta, eps); }
};

// linear2(act(linear1(x))), d -> hidden -> d.
struct FeedForward {
  LinearLayer first;
  LinearLayer second;
  Activation act = Activation::gelu;

  static FeedForward create(ParamStore& store, const std::string& path, std::size_t dim,
                            std::size_t hidden, Activation act);
  Tensor operator()(const Tensor& x) const { return second(activate(first(x), act)); }
};

// Stack of linear layers with the activation between consecutive layers and,
// optionally, after the last one.
struct Mlp {
  std::vector<LinearLayer> layers;
  Activation act = Activation::gelu;
  bool activate_output = false;

  static Mlp create(ParamStore& store, const std::string& path, std::size_t in,
                    const std::vector<std::size_t>& widths, Activation act, bool activate_output);
  Tensor operator()(const Tensor& x) const;
  std::size_t out_features() const { return layers.back().out_features(); }
};

}  // namespace eqnet::numerics
