#include "eqnet/geometry/pct_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/binary_io.hpp"

namespace eqnet::geometry {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line_no) {
  T v{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(tok) + "'");
  }
  return v;
}

PointCloud read_text(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError("line 1: missing PCT1 header");
  auto head = split_ws(line);
  if (head.size() != 4 || head[0] != "PCT1") {
    throw FormatError("line 1: expected 'PCT1 N a has_labels'");
  }
  const auto n = parse_number<std::size_t>(head[1], line_no);
  PointCloud cloud;
  cloud.attribute_dim = parse_number<std::size_t>(head[2], line_no);
  const auto has_labels = parse_number<int>(head[3], line_no);
  if (has_labels != 0 && has_labels != 1) throw FormatError("line 1: has_labels must be 0 or 1");
  const std::size_t expected = 3 + cloud.attribute_dim + static_cast<std::size_t>(has_labels);
  cloud.positions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ++line_no;
    if (!std::getline(in, line)) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(n) +
                        " points, file ended");
    }
    auto tok = split_ws(line);
    if (tok.size() != expected) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                        " fields, got " + std::to_string(tok.size()));
    }
    cloud.positions.push_back({parse_number<double>(tok[0], line_no),
                               parse_number<double>(tok[1], line_no),
                               parse_number<double>(tok[2], line_no)});
    for (std::size_t a = 0; a < cloud.attribute_dim; ++a)
      cloud.attributes.push_back(parse_number<double>(tok[3 + a], line_no));
    if (has_labels) cloud.labels.push_back(parse_number<int>(tok.back(), line_no));
  }
  return cloud;
}

PointCloud read_binary(std::istream& in) {
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 17) throw FormatError("binary PCT1: truncated header");
  const char* p = bytes.data() + 5;
  const auto n = binio::read_i32(p);
  const auto a = binio::read_i32(p + 4);
  const auto has_labels = binio::read_i32(p + 8);
  if (n < 0 || a < 0 || (has_labels != 0 && has_labels != 1)) {
    throw FormatError("binary PCT1: invalid header fields");
  }
  const std::size_t record = (3 + static_cast<std::size_t>(a)) * 8 + (has_labels ? 4 : 0);
  if (bytes.size() != 17 + record * static_cast<std::size_t>(n)) {
    throw FormatError("binary PCT1: expected " + std::to_string(17 + record * n) + " bytes, got " +
                      std::to_string(bytes.size()));
  }
  PointCloud cloud;
  cloud.attribute_dim = static_cast<std::size_t>(a);
  const char* r = bytes.data() + 17;
  for (std::int32_t i = 0; i < n; ++i) {
    cloud.positions.push_back({binio::read_f64(r), binio::read_f64(r + 8), binio::read_f64(r + 16)});
    r += 24;
    for (std::int32_t k = 0; k < a; ++k, r += 8) cloud.attributes.push_back(binio::read_f64(r));
    if (has_labels) {
      cloud.labels.push_back(binio::read_i32(r));
      r += 4;
    }
  }
  return cloud;
}

}  // namespace

void write_pct_text(std::ostream& out, const PointCloud& cloud) {
  cloud.validate();
  out << "PCT1 " << cloud.size() << ' ' << cloud.attribute_dim << ' ' << (cloud.has_labels() ? 1 : 0)
      << '\n';
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.positions[i];
    out << format_double(p[0]) << ' ' << format_double(p[1]) << ' ' << format_double(p[2]);
    for (double v : cloud.attributes_of(i)) out << ' ' << format_double(v);
    if (cloud.has_labels()) out << ' ' << cloud.labels[i];
    out << '\n';
  }
}

void write_pct_binary(std::ostream& out, const PointCloud& cloud) {
  cloud.validate();
  out.write("PCT1B", 5);
  binio::write_i32(out, static_cast<std::int32_t>(cloud.size()));
  binio::write_i32(out, static_cast<std::int32_t>(cloud.attribute_dim));
  binio::write_i32(out, cloud.has_labels() ? 1 : 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (double c : cloud.positions[i]) binio::write_f64(out, c);
    for (double v : cloud.attributes_of(i)) binio::write_f64(out, v);
    if (cloud.has_labels()) binio::write_i32(out, cloud.labels[i]);
  }
}

PointCloud read_pct(std::istream& in) {
  char magic[5] = {};
  in.read(magic, 5);
  if (in.gcount() != 5 || std::string_view(magic, 4) != "PCT1") {
    throw FormatError("not a PCT1 file (bad magic bytes)");
  }
  PointCloud cloud;
  if (magic[4] == 'B') {
    in.seekg(0);
    cloud = read_binary(in);
  } else if (magic[4] == ' ') {
    in.seekg(0);
    cloud = read_text(in);
  } else {
    throw FormatError("PCT1: unknown variant marker");
  }
  try {
    cloud.validate();
  } catch (const ValidationError& e) {
    throw FormatError(std::string("PCT1: ") + e.what());
  }
  return cloud;
}

void write_pct(const std::filesystem::path& path, const PointCloud& cloud, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  if (binary) write_pct_binary(out, cloud);
  else write_pct_text(out, cloud);
  if (!out) throw FormatError("write to '" + path.string() + "' failed");
}

PointCloud read_pct(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return read_pct(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<Vec3> read_positions(std::istream& in) {
  std::vector<Vec3> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 3) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 3 coordinates, got " +
                        std::to_string(tok.size()));
    }
    out.push_back({parse_number<double>(tok[0], line_no), parse_number<double>(tok[1], line_no),
                   parse_number<double>(tok[2], line_no)});
  }
  if (out.empty()) throw FormatError("positions file contains no positions");
  return out;
}

std::vector<Vec3> read_positions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return read_positions(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_positions(std::ostream& out, const std::vector<Vec3>& positions) {
  for (const auto& p : positions)
    out << format_double(p[0]) << ' ' << format_double(p[1]) << ' ' << format_double(p[2]) << '\n';
}

}  // namespace eqnet::geometry
