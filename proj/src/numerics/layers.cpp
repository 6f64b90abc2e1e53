#include "eqnet/numerics/layers.hpp"

#include "eqnet/errors.hpp"

namespace eqnet::numerics {

LinearLayer LinearLayer::create(ParamStore& store, const std::string& path, std::size_t in,
                                std::size_t out, bool with_bias) {
  if (in == 0 || out == 0) throw ConfigError(path + ": linear layer needs positive sizes");
  LinearLayer l;
  l.weight = store.create(path + ".weight", {in, out}, Init::uniform_fan);
  if (with_bias) l.bias = store.create(path + ".bias", {out}, Init::zeros);
  return l;
}

LayerNormLayer LayerNormLayer::create(ParamStore& store, const std::string& path,
                                      std::size_t dim) {
  LayerNormLayer ln;
  ln.gamma = store.create(path + ".gamma", {dim}, Init::ones);
  ln.beta = store.create(path + ".beta", {dim}, Init::zeros);
  return ln;
}

FeedForward FeedForward::create(ParamStore& store, const std::string& path, std::size_t dim,
                                std::size_t hidden, Activation act) {
  if (hidden < 1) throw ConfigError(path + ": feed-forward hidden size must be >= 1");
  FeedForward f;
  f.first = LinearLayer::create(store, path + ".fc1", dim, hidden);
  f.second = LinearLayer::create(store, path + ".fc2", hidden, dim);
  f.act = act;
  return f;
}

Mlp Mlp::create(ParamStore& store, const std::string& path, std::size_t in,
                const std::vector<std::size_t>& widths, Activation act, bool activate_output) {
  if (widths.empty()) throw ConfigError(path + ": MLP needs at least one layer");
  Mlp mlp;
  mlp.act = act;
  mlp.activate_output = activate_output;
  std::size_t prev = in;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    mlp.layers.push_back(LinearLayer::create(store, path + ".fc" + std::to_string(i), prev, widths[i]));
    prev = widths[i];
  }
  return mlp;
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size() || activate_output) h = activate(h, act);
  }
  return h;
}

}  // namespace eqnet::numerics
