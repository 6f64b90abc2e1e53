#include "eqnet/numerics/param_store.hpp"

#include <cmath>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/rng.hpp"

namespace eqnet::numerics {

Tensor ParamStore::create(const std::string& path, Shape shape, Init init) {
  if (entries_.count(path)) throw ContractError("duplicate parameter path '" + path + "'");
  if (shape.empty()) throw DimensionError("parameter '" + path + "' has empty shape");
  const std::size_t n = shape_size(shape);
  std::vector<double> values(n, 0.0);
  switch (init) {
    case Init::zeros:
      break;
    case Init::ones:
      std::fill(values.begin(), values.end(), 1.0);
      break;
    case Init::uniform_fan: {
      const double fan_in = static_cast<double>(shape.front());
      const double fan_out = static_cast<double>(shape.back());
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      Rng rng(derive_seed(init_seed_, path));
      for (auto& v : values) v = rng.uniform(-limit, limit);
      break;
    }
  }
  auto t = Tensor::from(std::move(shape), std::move(values), true);
  entries_.emplace(path, Entry{t, Buffer(n), Buffer(n)});
  return t;
}

const Tensor& ParamStore::get(const std::string& path) const {
  auto it = entries_.find(path);
  if (it == entries_.end()) throw ContractError("unknown parameter path '" + path + "'");
  return it->second.param;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.param.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, e] : entries_) e.param.zero_grad();
}

void ParamStore::step(const AdamConfig& config) {
  for (auto& [path, e] : entries_) {
    if (e.param.requires_grad() && !e.param.has_grad()) {
      throw ContractError("optimizer step: parameter '" + path + "' has no gradient");
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [_, e] : entries_) {
    if (!e.param.requires_grad()) continue;
    auto p = e.param.mutable_values();
    auto g = e.param.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      e.first_moment[i] = config.beta1 * e.first_moment[i] + (1.0 - config.beta1) * g[i];
      e.second_moment[i] = config.beta2 * e.second_moment[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = e.first_moment[i] / c1;
      const double vhat = e.second_moment[i] / c2;
      p[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
    e.param.zero_grad();
  }
}

}  // namespace eqnet::numerics
