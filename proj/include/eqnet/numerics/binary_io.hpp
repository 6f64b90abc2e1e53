#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <ostream>

// Little-endian scalar encoding shared by the checkpoint and point-cloud
// binary formats.
namespace eqnet::binio {

template <typename U>
inline U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U r = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
    return r;
  }
  return v;
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_i32(std::ostream& out, std::int32_t v) {
  write_u32(out, static_cast<std::uint32_t>(v));
}

inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline std::uint32_t read_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, sizeof v);
  return to_little(v);
}

inline std::uint64_t read_u64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, sizeof v);
  return to_little(v);
}

inline std::int32_t read_i32(const char* p) { return static_cast<std::int32_t>(read_u32(p)); }
inline double read_f64(const char* p) { return std::bit_cast<double>(read_u64(p)); }

}  // namespace eqnet::binio
