#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eqnet/geometry/point_cloud.hpp"

namespace eqnet::geometry {

// Greedy farthest point sampling. The first index is drawn uniformly from
// [0, N) by a generator seeded with `seed`; every later pick maximizes the
// squared distance to the nearest already-chosen point, ties going to the
// smallest index. Throws ValidationError unless 1 <= k <= N.
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t k,
                                                 std::uint64_t seed);

// Same greedy rule with an explicit first pick.
std::vector<std::size_t> farthest_point_sampling_from(std::span<const Vec3> points,
                                                      std::size_t k, std::size_t first);

// Index the seeded variant starts from for a cloud of n points.
std::size_t fps_first_index(std::size_t n, std::uint64_t seed);

}  // namespace eqnet::geometry
