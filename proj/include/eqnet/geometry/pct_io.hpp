#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "eqnet/geometry/point_cloud.hpp"

namespace eqnet::geometry {

// PCT1 point-cloud files.
//
// Text variant:
//   PCT1 <N> <a> <has_labels>
//   x y z [a attribute values] [label]        (N lines)
// Values are written with 17 significant digits, so text round-trips exactly.
//
// Binary variant (little-endian):
//   "PCT1" 'B' int32 N, int32 a, int32 has_labels,
//   then N records of 3 float64 coordinates, a float64 attributes and, when
//   has_labels is 1, one int32 label.
// The fifth byte tells the variants apart (' ' for text, 'B' for binary).

void write_pct_text(std::ostream& out, const PointCloud& cloud);
void write_pct_binary(std::ostream& out, const PointCloud& cloud);
// Auto-detects the variant; throws FormatError with a line number (text) or
// byte context (binary) on malformed input.
PointCloud read_pct(std::istream& in);

void write_pct(const std::filesystem::path& path, const PointCloud& cloud, bool binary);
PointCloud read_pct(const std::filesystem::path& path);

// Plain position list: one "x y z" per line; blank lines and lines starting
// with '#' are skipped.
std::vector<Vec3> read_positions(const std::filesystem::path& path);
std::vector<Vec3> read_positions(std::istream& in);
void write_positions(std::ostream& out, const std::vector<Vec3>& positions);

}  // namespace eqnet::geometry
