#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace eqnet {

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Seed derivation: every consumer of randomness gets its own stream,
//   derive_seed(root, tag) = splitmix64(root XOR fnv1a64(tag)).
// Nested consumers chain the call (derive_seed(derive_seed(root, "data"), "shape7")).
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) noexcept;
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace eqnet
