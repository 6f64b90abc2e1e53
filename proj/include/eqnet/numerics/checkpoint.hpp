#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqnet/numerics/param_store.hpp"

namespace eqnet::numerics {

// Checkpoint container layout (all integers little-endian):
//
//   offset 0   4 bytes   magic "EQCK"
//   offset 4   uint32    format version (1)
//   offset 8   uint64    manifest length L in bytes
//   offset 16  L bytes   UTF-8 JSON manifest
//   offset 16+L          blob region
//
// Manifest:
//   { "metadata": {...free-form...},
//     "tensors": [ {"name": str, "shape": [int...], "dtype": "float64",
//                   "offset": int, "nbytes": int}, ... ] }
//
// Each tensor's values are stored row-major as IEEE-754 binary64 at
// blob region + offset; tensors appear in name order.
struct Checkpoint {
  struct Entry {
    Shape shape;
    std::vector<double> values;
  };
  nlohmann::json metadata = nlohmann::json::object();
  std::map<std::string, Entry> tensors;

  // Copies stored values into the matching parameters of `store`; every
  // parameter must be present with identical shape.
  void apply_to(ParamStore& store) const;
};

inline constexpr char kCheckpointMagic[4] = {'E', 'Q', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store,
                     const nlohmann::json& metadata);
// Throws FormatError on bad magic, version, truncated data or a malformed
// manifest.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace eqnet::numerics
