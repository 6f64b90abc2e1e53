#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eqnet/numerics/tensor.hpp"

namespace eqnet::numerics {

enum class Init {
  zeros,
  ones,
  // U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); fan_in is the first
  // extent, fan_out the last.
  uniform_fan,
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named parameters plus adaptive-moment optimizer state. Parameter values are
// a pure function of (init seed, path, shape): creation order does not matter.
class ParamStore {
 public:
  struct Entry {
    Tensor param;
    Buffer first_moment;
    Buffer second_moment;
  };

  explicit ParamStore(std::uint64_t init_seed = 0) : init_seed_(init_seed) {}

  Tensor create(const std::string& path, Shape shape, Init init);

  bool contains(const std::string& path) const { return entries_.count(path) != 0; }
  const Tensor& get(const std::string& path) const;
  std::vector<std::string> names() const;
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  std::uint64_t step_count() const noexcept { return step_; }
  std::uint64_t init_seed() const noexcept { return init_seed_; }

  void zero_grad();

  // Bias-corrected adaptive-moment update of every parameter, then zeroes
  // the gradients. Throws ContractError if a parameter never received one.
  void step(const AdamConfig& config);

 private:
  std::uint64_t init_seed_;
  std::uint64_t step_ = 0;
  std::map<std::string, Entry> entries_;
};

inline void optimizer_step(ParamStore& store, const AdamConfig& config) { store.step(config); }

}  // namespace eqnet::numerics
