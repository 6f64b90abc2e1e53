#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace eqnet::geometry {

using Vec3 = std::array<double, 3>;

inline double squared_distance(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

inline Vec3 operator-(const Vec3& a, const Vec3& b) noexcept {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 operator+(const Vec3& a, const Vec3& b) noexcept {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

// N points with optional per-point attributes (row-major N x attribute_dim)
// and optional per-point integer labels.
struct PointCloud {
  std::vector<Vec3> positions;
  std::size_t attribute_dim = 0;
  std::vector<double> attributes;
  std::vector<int> labels;

  std::size_t size() const noexcept { return positions.size(); }
  bool has_labels() const noexcept { return !labels.empty(); }
  std::span<const double> attributes_of(std::size_t i) const {
    return {attributes.data() + i * attribute_dim, attribute_dim};
  }

  // Throws ValidationError unless N >= 1, all coordinates are finite and
  // attribute/label arrays have length N.
  void validate() const;

  // Point subset in the given order (attributes and labels follow).
  PointCloud subset(std::span<const std::size_t> indices) const;
};

struct Bounds {
  Vec3 min;
  Vec3 max;
};

Bounds bounding_box(std::span<const Vec3> points);

}  // namespace eqnet::geometry
