#include "eqnet/numerics/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/binary_io.hpp"

namespace eqnet::numerics {

void Checkpoint::apply_to(ParamStore& store) const {
  for (const auto& [name, entry] : store.entries()) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("checkpoint lacks parameter '" + name + "'");
    if (it->second.shape != entry.param.shape()) {
      throw FormatError("checkpoint parameter '" + name + "' has shape " +
                        shape_string(it->second.shape) + ", model expects " +
                        shape_string(entry.param.shape()));
    }
    Tensor param = entry.param;
    auto dst = param.mutable_values();
    std::copy(it->second.values.begin(), it->second.values.end(), dst.begin());
  }
  for (const auto& [name, _] : tensors) {
    if (!store.contains(name)) throw FormatError("checkpoint has unknown parameter '" + name + "'");
  }
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store,
                     const nlohmann::json& metadata) {
  nlohmann::json manifest;
  manifest["metadata"] = metadata;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, e] : store.entries()) {
    const std::uint64_t nbytes = e.param.size() * sizeof(double);
    manifest["tensors"].push_back({{"name", name},
                                   {"shape", e.param.shape()},
                                   {"dtype", "float64"},
                                   {"offset", offset},
                                   {"nbytes", nbytes}});
    offset += nbytes;
  }
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out.write(kCheckpointMagic, 4);
  binio::write_u32(out, kCheckpointVersion);
  binio::write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [_, e] : store.entries()) {
    for (double v : e.param.values()) binio::write_f64(out, v);
  }
  if (!out) throw FormatError("write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("'" + path.string() + "' is not a checkpoint (bad magic bytes)");
  }
  const auto version = binio::read_u32(bytes.data() + 4);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto manifest_len = binio::read_u64(bytes.data() + 8);
  if (manifest_len > bytes.size() - 16) throw FormatError("checkpoint manifest truncated");
  const std::size_t blob_start = 16 + manifest_len;

  Checkpoint ckpt;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + static_cast<long>(blob_start));
    ckpt.metadata = manifest.at("metadata");
    for (const auto& t : manifest.at("tensors")) {
      if (t.at("dtype") != "float64") throw FormatError("unsupported dtype " + t.at("dtype").dump());
      Checkpoint::Entry entry;
      entry.shape = t.at("shape").get<Shape>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto nbytes = t.at("nbytes").get<std::uint64_t>();
      if (nbytes != shape_size(entry.shape) * sizeof(double) ||
          blob_start + offset + nbytes > bytes.size()) {
        throw FormatError("tensor '" + t.at("name").get<std::string>() + "' has an invalid extent");
      }
      entry.values.resize(nbytes / sizeof(double));
      const char* src = bytes.data() + blob_start + offset;
      for (std::size_t i = 0; i < entry.values.size(); ++i)
        entry.values[i] = binio::read_f64(src + i * sizeof(double));
      ckpt.tensors.emplace(t.at("name").get<std::string>(), std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint manifest: ") + e.what());
  }
  return ckpt;
}

}  // namespace eqnet::numerics
