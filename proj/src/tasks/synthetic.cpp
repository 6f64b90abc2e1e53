#include "eqnet/tasks/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/rng.hpp"

namespace eqnet::tasks {

namespace {

constexpr double kPi = std::numbers::pi;

using Mat3 = std::array<std::array<double, 3>, 3>;

// Uniform random rotation from a unit quaternion (Shoemake).
Mat3 random_rotation(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double x = a * std::sin(2 * kPi * u2), y = a * std::cos(2 * kPi * u2);
  const double z = b * std::sin(2 * kPi * u3), w = b * std::cos(2 * kPi * u3);
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

Vec3 rotate(const Mat3& r, const Vec3& p) {
  Vec3 out{};
  for (int i = 0; i < 3; ++i) out[i] = r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2];
  return out;
}

Vec3 sphere_point(Rng& rng) {
  Vec3 v;
  double n = 0.0;
  do {
    v = {rng.normal(), rng.normal(), rng.normal()};
    n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  } while (n < 1e-12);
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Point on one of the listed faces of the cube [-h, h]^3. Faces 0..5 are
// -x, +x, -y, +y, +z, -z.
Vec3 cube_point(Rng& rng, double h, std::size_t faces) {
  const std::size_t f = rng.index(faces);
  const double s = rng.uniform(-h, h), t = rng.uniform(-h, h);
  switch (f) {
    case 0: return {-h, s, t};
    case 1: return {h, s, t};
    case 2: return {s, -h, t};
    case 3: return {s, h, t};
    case 4: return {s, t, h};
    default: return {s, t, -h};
  }
}

Vec3 cylinder_point(Rng& rng, double r, double height) {
  const double side = 2 * kPi * r * height, caps = 2 * kPi * r * r;
  if (rng.uniform() < side / (side + caps)) {
    const double phi = rng.uniform(0, 2 * kPi);
    return {r * std::cos(phi), r * std::sin(phi), rng.uniform(-height / 2, height / 2)};
  }
  const double rho = r * std::sqrt(rng.uniform()), phi = rng.uniform(0, 2 * kPi);
  return {rho * std::cos(phi), rho * std::sin(phi), rng.uniform() < 0.5 ? -height / 2 : height / 2};
}

Vec3 canonical_point(Rng& rng, ShapeCategory c) {
  switch (c) {
    case ShapeCategory::sphere_shell: return sphere_point(rng);
    case ShapeCategory::cube_surface: return cube_point(rng, 0.8, 6);
    case ShapeCategory::cylinder_surface: return cylinder_point(rng, 0.8, 1.6);
    case ShapeCategory::plane_patch: return {rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0};
  }
  return {};
}

}  // namespace

std::string_view shape_category_name(ShapeCategory c) {
  switch (c) {
    case ShapeCategory::sphere_shell: return "sphere_shell";
    case ShapeCategory::cube_surface: return "cube_surface";
    case ShapeCategory::cylinder_surface: return "cylinder_surface";
    case ShapeCategory::plane_patch: return "plane_patch";
  }
  return "unknown";
}

PointCloud randomly_rotated(const PointCloud& cloud, std::uint64_t seed, bool vertical_axis_only) {
  Rng rng(seed);
  Mat3 rot;
  if (vertical_axis_only) {
    const double a = rng.uniform(0, 2 * kPi), c = std::cos(a), s = std::sin(a);
    rot = {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  } else {
    rot = random_rotation(rng);
  }
  Vec3 centroid{};
  for (const auto& p : cloud.positions)
    for (int k = 0; k < 3; ++k) centroid[k] += p[k];
  for (auto& c : centroid) c /= static_cast<double>(std::max<std::size_t>(cloud.size(), 1));
  PointCloud out = cloud;
  for (auto& p : out.positions) {
    const Vec3 d{p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]};
    const Vec3 r = rotate(rot, d);
    for (int k = 0; k < 3; ++k) p[k] = centroid[k] + r[k];
  }
  return out;
}

void ShapeConfig::validate() const {
  if (min_points == 0 || min_points > max_points) throw ConfigError("shapes: need 1 <= min_points <= max_points");
  if (jitter < 0 || scale_spread < 0 || scale_spread >= 1 || translation < 0)
    throw ConfigError("shapes: invalid jitter, scale spread or translation");
}

std::vector<SyntheticShape> generate_shapes(std::size_t count, std::uint64_t seed, const ShapeConfig& config) {
  if (count == 0) throw ValidationError("generate_shapes: count must be at least 1");
  config.validate();
  std::vector<SyntheticShape> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    SyntheticShape shape;
    shape.category = static_cast<ShapeCategory>(i % kShapeCategories);
    const std::size_t n = config.min_points + rng.index(config.max_points - config.min_points + 1);
    shape.scale = rng.uniform(1 - config.scale_spread, 1 + config.scale_spread);
    const Mat3 rot = random_rotation(rng);
    for (auto& c : shape.center) c = rng.uniform(-config.translation, config.translation);
    shape.cloud.positions.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Vec3 p = rotate(rot, canonical_point(rng, shape.category));
      Vec3 q;
      for (int c = 0; c < 3; ++c) q[c] = shape.center[c] + shape.scale * p[c] + config.jitter * rng.normal();
      shape.cloud.positions.push_back(q);
    }
    out.push_back(std::move(shape));
  }
  return out;
}

void SceneConfig::validate() const {
  if (points == 0) throw ConfigError("scenes: points must be positive");
  if (min_shapes == 0 || min_shapes > max_shapes) throw ConfigError("scenes: need 1 <= min_shapes <= max_shapes");
  if (!(ground_fraction > 0 && ground_fraction < 1)) throw ConfigError("scenes: ground_fraction must be in (0, 1)");
  if (!(min_radius > 0 && min_radius <= max_radius)) throw ConfigError("scenes: invalid radius range");
  if (extent <= max_radius * std::sqrt(2.0)) throw ConfigError("scenes: ground too small for the shapes");
  if (points < max_shapes + 1) throw ConfigError("scenes: too few points for the shape count");
}

std::vector<std::size_t> SceneConfig::allocation(std::size_t shapes) const {
  const auto ground = static_cast<std::size_t>(std::llround(static_cast<double>(points) * ground_fraction));
  std::vector<std::size_t> alloc{ground};
  const std::size_t rest = points - ground;
  for (std::size_t s = 0; s < shapes; ++s) alloc.push_back(rest / shapes + (s < rest % shapes ? 1 : 0));
  return alloc;
}

namespace {

double footprint_radius(const PlacedShape& s) {
  return s.label == kSphereLabel ? s.size : s.size * std::sqrt(2.0);
}

bool inside_footprint(const PlacedShape& s, double x, double y) {
  const double dx = x - s.center[0], dy = y - s.center[1];
  if (s.label == kSphereLabel) return dx * dx + dy * dy < s.size * s.size;
  const double c = std::cos(s.yaw), sn = std::sin(s.yaw);
  const double lx = c * dx + sn * dy, ly = -sn * dx + c * dy;
  return std::abs(lx) < s.size && std::abs(ly) < s.size;
}

Vec3 shape_surface_point(Rng& rng, const PlacedShape& s) {
  if (s.label == kSphereLabel) {
    const Vec3 u = sphere_point(rng);
    return {s.center[0] + s.size * u[0], s.center[1] + s.size * u[1], s.center[2] + s.size * u[2]};
  }
  const Vec3 p = cube_point(rng, s.size, 5);  // no bottom face
  const double c = std::cos(s.yaw), sn = std::sin(s.yaw);
  return {s.center[0] + c * p[0] - sn * p[1], s.center[1] + sn * p[0] + c * p[1], s.center[2] + p[2]};
}

}  // namespace

std::vector<SyntheticScene> generate_scenes(std::size_t count, std::uint64_t seed, const SceneConfig& config) {
  if (count == 0) throw ValidationError("generate_scenes: count must be at least 1");
  config.validate();
  std::vector<SyntheticScene> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    Rng rng(derive_seed(seed, s));
    SyntheticScene scene;
    const std::size_t k = config.min_shapes + rng.index(config.max_shapes - config.min_shapes + 1);
    for (std::size_t j = 0; j < k; ++j) {
      PlacedShape shape;
      shape.label = 1 + static_cast<int>((s + j) % 2);
      shape.size = rng.uniform(config.min_radius, config.max_radius);
      shape.yaw = shape.label == kCubeLabel ? rng.uniform(0, kPi / 2) : 0.0;
      const double r = footprint_radius(shape);
      bool placed = false;
      for (std::size_t attempt = 0; attempt < config.max_rejections && !placed; ++attempt) {
        shape.center = {rng.uniform(-config.extent + r, config.extent - r),
                        rng.uniform(-config.extent + r, config.extent - r), shape.size};
        placed = true;
        for (const auto& other : scene.shapes) {
          const double dx = shape.center[0] - other.center[0], dy = shape.center[1] - other.center[1];
          const double need = r + footprint_radius(other) + config.gap;
          if (dx * dx + dy * dy < need * need) {
            placed = false;
            break;
          }
        }
      }
      if (!placed) {
        throw GenerationError("scene " + std::to_string(s) + ": could not place shape " + std::to_string(j) +
                              " after " + std::to_string(config.max_rejections) + " attempts");
      }
      scene.shapes.push_back(shape);
    }

    const auto alloc = config.allocation(k);
    auto& cloud = scene.cloud;
    cloud.attribute_dim = 1;
    auto emit = [&](Vec3 p, int label) {
      for (auto& c : p) c += config.jitter * rng.normal();
      cloud.positions.push_back(p);
      cloud.attributes.push_back(p[2]);
      cloud.labels.push_back(label);
    };
    for (std::size_t i = 0; i < alloc[0]; ++i) {
      double x = 0, y = 0;
      bool covered = true;
      while (covered) {
        x = rng.uniform(-config.extent, config.extent);
        y = rng.uniform(-config.extent, config.extent);
        covered = false;
        for (const auto& sh : scene.shapes) covered = covered || inside_footprint(sh, x, y);
      }
      emit({x, y, 0.0}, kBackground);
    }
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < alloc[j + 1]; ++i) emit(shape_surface_point(rng, scene.shapes[j]), scene.shapes[j].label);
    out.push_back(std::move(scene));
  }
  return out;
}

}  // namespace eqnet::tasks
