#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "eqnet/geometry/point_cloud.hpp"

namespace eqnet::tasks {

using geometry::PointCloud;
using geometry::Vec3;

enum class ShapeCategory { sphere_shell = 0, cube_surface = 1, cylinder_surface = 2, plane_patch = 3 };
inline constexpr int kShapeCategories = 4;

std::string_view shape_category_name(ShapeCategory c);

struct ShapeConfig {
  std::size_t min_points = 192;
  std::size_t max_points = 256;
  double jitter = 0.01;       // stddev of Gaussian noise per coordinate
  double scale_spread = 0.1;  // scale drawn from [1 - s, 1 + s]
  double translation = 1.0;   // offset drawn from [-t, t]^3

  void validate() const;
};

struct SyntheticShape {
  ShapeCategory category;
  PointCloud cloud;  // no attributes, no labels
  Vec3 center{};
  double scale = 1.0;
};

// Canonical sizes before scaling: sphere radius 1, cube side 1.6, cylinder
// radius 0.8 and height 1.6 (side and caps), plane 2 x 2. Shape i has
// category i % 4, so categories are balanced to within one shape.
std::vector<SyntheticShape> generate_shapes(std::size_t count, std::uint64_t seed, const ShapeConfig& config = {});

// Random rigid rotation about the cloud centroid: uniform over SO(3), or
// about the vertical axis only. Attributes and labels are copied unchanged.
PointCloud randomly_rotated(const PointCloud& cloud, std::uint64_t seed, bool vertical_axis_only);

// Scene labels.
inline constexpr int kBackground = 0;
inline constexpr int kSphereLabel = 1;
inline constexpr int kCubeLabel = 2;
inline constexpr int kSceneClasses = 3;

struct SceneConfig {
  std::size_t points = 512;
  std::size_t min_shapes = 2;
  std::size_t max_shapes = 4;
  double extent = 2.0;              // ground is [-extent, extent]^2 at z = 0
  double ground_fraction = 0.4;     // share of points on the ground
  double min_radius = 0.3;          // sphere radius / half cube side range
  double max_radius = 0.45;
  double gap = 0.1;                 // clearance between footprints
  double jitter = 0.01;
  std::size_t max_rejections = 200;

  void validate() const;
  // Points per surface for a scene with `shapes` objects: ground first, then
  // the remainder split evenly with the first shapes taking the leftovers.
  std::vector<std::size_t> allocation(std::size_t shapes) const;
};

struct PlacedShape {
  int label = kSphereLabel;
  Vec3 center{};   // sphere center / cube center
  double size = 0;  // sphere radius / cube half side
  double yaw = 0;   // cube rotation about z
};

struct SyntheticScene {
  PointCloud cloud;  // attribute 0 is the point height z; labels per point
  std::vector<PlacedShape> shapes;
};

// Shapes rest on the ground; scene s uses labels alternating sphere/cube
// starting with 1 + s % 2, so both foreground classes are balanced. Ground
// points inside a footprint are resampled and cube bottoms are not sampled.
// Throws GenerationError when a shape cannot be placed after max_rejections.
std::vector<SyntheticScene> generate_scenes(std::size_t count, std::uint64_t seed, const SceneConfig& config = {});

}  // namespace eqnet::tasks
