#pragma once

// Brute-force reference implementations used by the unit and acceptance
// suites. They deliberately avoid the library's kernels.

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "eqnet/geometry/knn.hpp"
#include "eqnet/geometry/point_cloud.hpp"
#include "eqnet/geometry/voxel.hpp"
#include "eqnet/numerics/rng.hpp"

namespace eqnet::testing {

using geometry::Vec3;

inline std::vector<Vec3> random_points(Rng& rng, std::size_t n, double extent = 1.0) {
  std::vector<Vec3> out(n);
  for (auto& p : out) p = {rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent)};
  return out;
}

inline double sq(const Vec3& a, const Vec3& b) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

// True when every pick after the first maximizes the min squared distance to
// the previously chosen set, ties to the smallest index, and no index repeats.
inline bool fps_matches_greedy_oracle(const std::vector<Vec3>& pts, const std::vector<std::size_t>& picks) {
  std::set<std::size_t> chosen{picks.front()};
  for (std::size_t t = 1; t < picks.size(); ++t) {
    std::size_t best = pts.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (chosen.count(i)) continue;
      double d = INFINITY;
      for (auto c : chosen) d = std::min(d, sq(pts[i], pts[c]));
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    if (picks[t] != best) return false;
    chosen.insert(picks[t]);
  }
  return chosen.size() == picks.size();
}

struct KnnOracleRow {
  std::vector<std::size_t> index;
  std::vector<double> distance;
};

// Full sort of every source by (distance, index).
inline std::vector<KnnOracleRow> knn_oracle(const std::vector<Vec3>& targets, const std::vector<Vec3>& sources,
                                            std::size_t k) {
  std::vector<KnnOracleRow> rows;
  for (const auto& t : targets) {
    std::vector<std::size_t> order(sources.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sq(t, sources[a]) < sq(t, sources[b]); });
    KnnOracleRow row;
    for (std::size_t s = 0; s < std::min(k, sources.size()); ++s) {
      row.index.push_back(order[s]);
      row.distance.push_back(std::sqrt(sq(t, sources[order[s]])));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline bool knn_matches_oracle(const geometry::NeighborTable& table, const std::vector<Vec3>& targets,
                               const std::vector<Vec3>& sources, std::size_t k) {
  auto rows = knn_oracle(targets, sources, k);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    for (std::size_t s = 0; s < rows[i].index.size(); ++s) {
      if (table.at(i, s) != rows[i].index[s] || table.distance_at(i, s) != rows[i].distance[s] ||
          table.is_padded(i, s))
        return false;
    }
  }
  return true;
}

// Every point sits in the cell given by an independently evaluated floor
// rule, appears exactly once across all member lists and no cell is empty.
inline bool voxel_partition_matches_oracle(const geometry::VoxelGrid& grid, const std::vector<Vec3>& pts) {
  std::vector<int> seen(pts.size(), 0);
  for (const auto& [cell, members] : grid.cells) {
    if (members.empty()) return false;
    for (auto i : members) {
      if (i >= pts.size()) return false;
      ++seen[i];
      for (int k = 0; k < 3; ++k) {
        const auto expected = static_cast<std::int64_t>(std::floor((pts[i][k] - grid.origin[k]) / grid.cell_size[k]));
        if (cell[k] != expected) return false;
      }
    }
    if (!std::is_sorted(members.begin(), members.end())) return false;
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

}  // namespace eqnet::testing
