#include "eqnet/geometry/knn.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "eqnet/errors.hpp"

namespace eqnet::geometry {

bool NeighborTable::has_padding() const {
  return std::any_of(padded.begin(), padded.end(), [](auto p) { return p != 0; });
}

std::size_t NeighborTable::valid_per_row() const {
  if (rows == 0) return k;
  std::size_t valid = 0;
  for (std::size_t s = 0; s < k; ++s) valid += padded[s] ? 0 : 1;
  return valid;
}

NeighborTable NeighborTable::all_pairs(std::size_t targets, std::size_t sources) {
  NeighborTable t;
  t.rows = targets;
  t.k = sources;
  t.index.resize(targets * sources);
  t.distance.assign(targets * sources, 0.0);
  t.padded.assign(targets * sources, 0);
  for (std::size_t i = 0; i < targets; ++i)
    for (std::size_t j = 0; j < sources; ++j) t.index[i * sources + j] = j;
  return t;
}

NeighborTable k_nearest_neighbors(std::span<const Vec3> targets, std::span<const Vec3> sources,
                                  std::size_t k) {
  if (sources.empty()) throw ValidationError("k-nearest neighbors: no source points");
  if (k < 1) throw ValidationError("k-nearest neighbors: K must be >= 1");
  const std::size_t n = sources.size();
  const std::size_t real = std::min(k, n);
  NeighborTable t;
  t.rows = targets.size();
  t.k = k;
  t.index.resize(t.rows * k);
  t.distance.resize(t.rows * k);
  t.padded.assign(t.rows * k, 0);
  std::vector<std::pair<double, std::size_t>> cand(n);
  for (std::size_t i = 0; i < t.rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) cand[j] = {squared_distance(targets[i], sources[j]), j};
    if (real < n) {
      std::nth_element(cand.begin(), cand.begin() + static_cast<long>(real - 1), cand.end());
      std::sort(cand.begin(), cand.begin() + static_cast<long>(real));
    } else {
      std::sort(cand.begin(), cand.end());
    }
    for (std::size_t s = 0; s < k; ++s) {
      const auto& c = s < real ? cand[s] : cand[0];
      t.index[i * k + s] = c.second;
      t.distance[i * k + s] = std::sqrt(c.first);
      t.padded[i * k + s] = s < real ? 0 : 1;
    }
  }
  return t;
}

}  // namespace eqnet::geometry
