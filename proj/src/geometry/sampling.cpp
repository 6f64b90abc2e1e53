#include "eqnet/geometry/sampling.hpp"

#include <limits>
#include <string>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/rng.hpp"

namespace eqnet::geometry {

std::size_t fps_first_index(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("farthest point sampling on an empty cloud");
  return Rng(seed).index(n);
}

std::vector<std::size_t> farthest_point_sampling_from(std::span<const Vec3> points,
                                                      std::size_t k, std::size_t first) {
  const std::size_t n = points.size();
  if (k < 1 || k > n) {
    throw ValidationError("farthest point sampling: k=" + std::to_string(k) +
                          " outside [1, N=" + std::to_string(n) + "]");
  }
  if (first >= n) throw ValidationError("farthest point sampling: first index out of range");
  std::vector<std::size_t> picks;
  picks.reserve(k);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t current = first;
  for (std::size_t step = 0; step < k; ++step) {
    picks.push_back(current);
    // Chosen points drop out of the running (matters for duplicate points).
    nearest[current] = -1.0;
    const Vec3 c = points[current];
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] < 0.0) continue;
      const double d = squared_distance(points[i], c);
      if (d < nearest[i]) nearest[i] = d;
      if (nearest[i] > best_d) {
        best_d = nearest[i];
        best = i;
      }
    }
    current = best;
  }
  return picks;
}

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t k,
                                                 std::uint64_t seed) {
  if (points.empty()) throw ValidationError("farthest point sampling on an empty cloud");
  return farthest_point_sampling_from(points, k, fps_first_index(points.size(), seed));
}

}  // namespace eqnet::geometry
