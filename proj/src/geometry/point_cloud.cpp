#include "eqnet/geometry/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eqnet/errors.hpp"

namespace eqnet::geometry {

void PointCloud::validate() const {
  if (positions.empty()) throw ValidationError("point cloud is empty");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (double c : positions[i]) {
      if (!std::isfinite(c)) {
        throw ValidationError("point " + std::to_string(i) + " has a non-finite coordinate");
      }
    }
  }
  if (attributes.size() != positions.size() * attribute_dim) {
    throw ValidationError("point cloud has " + std::to_string(attributes.size()) +
                          " attribute values, expected " +
                          std::to_string(positions.size() * attribute_dim));
  }
  if (!labels.empty() && labels.size() != positions.size()) {
    throw ValidationError("point cloud has " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(positions.size()) + " points");
  }
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  PointCloud out;
  out.attribute_dim = attribute_dim;
  out.positions.reserve(indices.size());
  for (auto i : indices) {
    if (i >= size()) throw ValidationError("subset index out of range");
    out.positions.push_back(positions[i]);
    auto a = attributes_of(i);
    out.attributes.insert(out.attributes.end(), a.begin(), a.end());
    if (has_labels()) out.labels.push_back(labels[i]);
  }
  return out;
}

Bounds bounding_box(std::span<const Vec3> points) {
  if (points.empty()) throw ValidationError("bounding box of an empty point set");
  Bounds b{points[0], points[0]};
  for (const auto& p : points) {
    for (int k = 0; k < 3; ++k) {
      b.min[k] = std::min(b.min[k], p[k]);
      b.max[k] = std::max(b.max[k], p[k]);
    }
  }
  return b;
}

}  // namespace eqnet::geometry
