#include "eqnet/geometry/voxel.hpp"

#include <cmath>

#include "eqnet/errors.hpp"

namespace eqnet::geometry {

CellIndex VoxelGrid::cell_of(const Vec3& p) const {
  CellIndex c;
  for (int k = 0; k < 3; ++k)
    c[k] = static_cast<std::int64_t>(std::floor((p[k] - origin[k]) / cell_size[k]));
  return c;
}

Vec3 VoxelGrid::center(const CellIndex& c) const {
  Vec3 out;
  for (int k = 0; k < 3; ++k)
    out[k] = origin[k] + (static_cast<double>(c[k]) + 0.5) * cell_size[k];
  return out;
}

std::vector<Vec3> VoxelGrid::centers() const {
  std::vector<Vec3> out;
  out.reserve(cells.size());
  for (const auto& [c, _] : cells) out.push_back(center(c));
  return out;
}

VoxelGrid voxelize(std::span<const Vec3> points, const Vec3& cell_size, const Vec3& origin) {
  for (double s : cell_size) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("voxelize: cell size must be positive");
  }
  VoxelGrid grid;
  grid.origin = origin;
  grid.cell_size = cell_size;
  for (std::size_t i = 0; i < points.size(); ++i) grid.cells[grid.cell_of(points[i])].push_back(i);
  return grid;
}

VoxelGrid voxelize(std::span<const Vec3> points, const Vec3& cell_size) {
  for (double s : cell_size) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("voxelize: cell size must be positive");
  }
  if (points.empty()) throw ValidationError("voxelize: no points");
  return voxelize(points, cell_size, bounding_box(points).min);
}

}  // namespace eqnet::geometry
