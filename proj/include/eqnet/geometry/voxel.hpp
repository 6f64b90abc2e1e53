#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "eqnet/geometry/point_cloud.hpp"

namespace eqnet::geometry {

using CellIndex = std::array<std::int64_t, 3>;

// Occupied cells of an axis-aligned grid. Point p lives in cell
// floor((p - origin) / cell_size); member lists are ascending and together
// partition the point indices. Cells iterate in lexicographic index order.
struct VoxelGrid {
  Vec3 origin{};
  Vec3 cell_size{1.0, 1.0, 1.0};
  std::map<CellIndex, std::vector<std::size_t>> cells;

  CellIndex cell_of(const Vec3& p) const;
  Vec3 center(const CellIndex& c) const;
  std::size_t occupied() const noexcept { return cells.size(); }
  std::vector<Vec3> centers() const;
};

// Grid anchored at the componentwise minimum of the points.
VoxelGrid voxelize(std::span<const Vec3> points, const Vec3& cell_size);
// Grid with an explicit origin.
VoxelGrid voxelize(std::span<const Vec3> points, const Vec3& cell_size, const Vec3& origin);

}  // namespace eqnet::geometry
