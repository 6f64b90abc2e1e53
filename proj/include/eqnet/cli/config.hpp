#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eqnet/tasks/model.hpp"
#include "eqnet/tasks/training.hpp"

namespace eqnet::cli {

// Experiment config files.
//
//   # comment            ; comment
//   task = classification
//   seed = 7
//   [train]
//   epochs = 30
//   lr = 0.003
//
// One `key = value` per line. Keys before the first [section] are top level
// (task, seed); every other key belongs to the most recent section. Lists are
// separated by commas or spaces. Unknown sections or keys, repeated keys and
// unparsable values are rejected with the line number. `task` is required.
//
// canonical() writes every effective value (defaults included) in sorted
// order; its FNV-1a hash is the config hash stamped into reports and
// checkpoints.

struct DataSettings {
  std::uint64_t seed = 1;
  std::size_t train = 512;
  std::size_t test = 128;
  std::size_t min_points = 192;   // shapes
  std::size_t max_points = 256;
  std::size_t scene_points = 512;  // scenes
  std::size_t min_shapes = 2;
  std::size_t max_shapes = 4;
  double jitter = 0.01;
};

struct EmbeddingSettings {
  tasks::EmbeddingKind type = tasks::EmbeddingKind::point;
  // Point backbone: one entry per level. `group` may hold a single value for
  // every level. Level 0 runs an MLP width/2 -> width, later levels -> width.
  std::vector<std::size_t> samples{64, 16};
  std::vector<std::size_t> group{16, 8};
  std::size_t width = 32;
  // Voxel backbone.
  double cell = 0.25;
  std::size_t levels = 3;
};

struct QNetSettings {
  std::size_t blocks = 2;
  std::size_t heads = 2;
  std::size_t neighbors = 16;  // 0 = global attention
  std::size_t ffn_mult = 2;
};

struct HeadSettings {
  std::size_t hidden = 64;
  tasks::VoteMode vote = tasks::VoteMode::pooled;
  std::size_t queries = 16;
};

struct TrainSettings {
  std::size_t epochs = 30;
  std::size_t batch = 8;
  double lr = 3e-3;
  bool cosine = true;
  double min_lr_factor = 0.05;
  bool augment = true;
  bool eval_each_epoch = true;
};

struct GradcheckSettings {
  std::size_t points = 16;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::string corrupt;  // parameter name for fault injection, empty = none
};

struct BenchSettings {
  std::vector<std::size_t> sizes{256, 1024, 4096};
  std::size_t queries = 256;
  std::size_t neighbors = 16;
  std::size_t dim = 16;
  std::size_t heads = 2;
  std::size_t repeats = 3;
};

struct OutputSettings {
  std::string dir = "runs/default";
  bool binary = false;  // PCT1 variant written by gen-data
};

struct ExperimentConfig {
  tasks::TaskKind task = tasks::TaskKind::classification;
  std::uint64_t seed = 0;
  DataSettings data;
  EmbeddingSettings embedding;
  QNetSettings qnet;
  HeadSettings head;
  TrainSettings train;
  GradcheckSettings gradcheck;
  BenchSettings bench;
  OutputSettings output;

  // Throws ConfigError for values that cannot build a model or dataset.
  void validate() const;

  std::string canonical() const;
  std::string hash() const;       // 16 hex digits over canonical()
  std::string data_hash() const;  // task + [data] only: identifies a dataset
};

// `source` names the text in diagnostics ("file.ini:12: ...").
ExperimentConfig parse_config(std::string_view text, std::string_view source = "config",
                              const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Every key accepted by the grammar, as "section.key" (or "key" at top level).
std::vector<std::string> config_keys();

// Derived settings.
tasks::ModelConfig model_config(const ExperimentConfig& cfg);
tasks::TrainConfig train_config(const ExperimentConfig& cfg);
std::pair<tasks::Dataset, tasks::Dataset> make_datasets(const ExperimentConfig& cfg);

// Seeds split from the root seed.
std::uint64_t init_seed(const ExperimentConfig& cfg);
std::uint64_t eval_seed(const ExperimentConfig& cfg);

std::string hex64(std::uint64_t v);

}  // namespace eqnet::cli
