#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eqnet/geometry/point_cloud.hpp"

namespace eqnet::geometry {

// Row-major rows x k table of source indices per target.
struct NeighborTable {
  std::size_t rows = 0;
  std::size_t k = 0;
  std::vector<std::size_t> index;
  std::vector<double> distance;  // Euclidean
  // 1 where the slot repeats the nearest source because k exceeded the number
  // of sources; such slots carry no new neighbor.
  std::vector<std::uint8_t> padded;

  std::size_t at(std::size_t row, std::size_t slot) const { return index[row * k + slot]; }
  double distance_at(std::size_t row, std::size_t slot) const { return distance[row * k + slot]; }
  bool is_padded(std::size_t row, std::size_t slot) const { return padded[row * k + slot] != 0; }
  bool has_padding() const;
  // Number of real (non-padded) slots per row.
  std::size_t valid_per_row() const;

  // Every target paired with every source in index order (global attention).
  static NeighborTable all_pairs(std::size_t targets, std::size_t sources);
};

// K nearest sources per target by exact Euclidean distance, ascending, ties to
// the smaller source index. When K > n the row is padded with the nearest
// source and the padded slots are flagged.
NeighborTable k_nearest_neighbors(std::span<const Vec3> targets, std::span<const Vec3> sources,
                                  std::size_t k);

}  // namespace eqnet::geometry
