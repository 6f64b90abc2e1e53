#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqnet/cli/config.hpp"
#include "eqnet/errors.hpp"
#include "eqnet/numerics/gradcheck.hpp"

namespace eqnet::cli {

// Checkpoint or dataset produced under a different config / data hash.
class HashMismatchError : public Error {
 public:
  using Error::Error;
};

// 0 ok, 1 failure, 2 config or usage, 3 file format, 4 hash mismatch.
int exit_code_for(const std::exception& e) noexcept;

// train ----------------------------------------------------------------------

struct TrainOptions {
  std::filesystem::path out_dir;  // empty = [output] dir
  std::optional<std::filesystem::path> data_manifest;
  std::ostream* log = nullptr;
};

struct TrainOutcome {
  tasks::TrainReport report;
  tasks::Metrics metrics;
  tasks::Metrics baseline;
  std::filesystem::path checkpoint;
};

// Writes checkpoint.eqck, report.jsonl, metrics.txt and config.ini into the
// output directory.
TrainOutcome run_train(const ExperimentConfig& cfg, const TrainOptions& options = {});

// Trains in memory only; used by the acceptance checks.
struct TrainedModel {
  std::unique_ptr<tasks::Model> model;
  tasks::TrainReport report;
  tasks::Metrics baseline;
};
TrainedModel train_model(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// checkpoints ------------------------------------------------------------------

struct LoadedModel {
  ExperimentConfig config;
  std::unique_ptr<tasks::Model> model;
  nlohmann::json metadata;
};

void save_model(const std::filesystem::path& path, const tasks::Model& model, const ExperimentConfig& cfg);
// Throws FormatError for a damaged container or missing metadata.
LoadedModel load_model(const std::filesystem::path& path);

// datasets ---------------------------------------------------------------------

// gen-data writes <out>/train/NNNNNN.pct, <out>/test/NNNNNN.pct and
// <out>/manifest.json:
//   {"task", "classes", "data_hash", "config_hash",
//    "train": [{"file", "label"}...], "test": [...]}
// Segmentation files carry per-point labels; "label" is then -1.
std::filesystem::path run_gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct ManifestSplit {
  tasks::Dataset data;
  std::string data_hash;
};
ManifestSplit load_manifest_split(const std::filesystem::path& manifest, const std::string& split);

// eval -------------------------------------------------------------------------

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> data_manifest;  // test split is used
  std::optional<ExperimentConfig> config;              // must hash-match
  bool force = false;
  std::optional<std::filesystem::path> out_dir;  // writes eval_metrics.txt
};

// Without a manifest the test split is regenerated from the config stored in
// the checkpoint (or from `config` when given).
tasks::Metrics run_eval(const EvalOptions& options, std::ostream* log = nullptr);

// gradcheck --------------------------------------------------------------------

struct GradcheckOutcome {
  numerics::GradCheckReport report;
  double tolerance = 0.0;
  std::size_t scalars = 0;
  double seconds = 0.0;
};

// Builds the configured model at small size (width <= 8, points <= 16) and
// checks the gradient of the task loss w.r.t. every parameter tensor.
GradcheckOutcome run_gradcheck(const ExperimentConfig& cfg);
void write_gradcheck_table(std::ostream& out, const GradcheckOutcome& outcome);

// query ------------------------------------------------------------------------

struct QueryOutcome {
  numerics::Tensor features;       // m x feature width
  std::vector<std::size_t> far;    // positions whose nearest support is beyond the threshold
  double threshold = 0.0;          // bounding-box diagonal of the cloud
};

// Features for arbitrary positions. `sample_seed` fixes the backbone's
// sampling; evaluation of dataset sample i uses derive_seed(eval seed, i).
QueryOutcome query_model(const tasks::Model& model, const geometry::PointCloud& cloud,
                         std::span<const geometry::Vec3> positions, std::uint64_t sample_seed);
void write_features(std::ostream& out, const numerics::Tensor& features);

// bench ------------------------------------------------------------------------

struct AttentionMeasurement {
  std::size_t n = 0, m = 0, k = 0;
  double knn_ms = 0, local_ms = 0, global_ms = 0, qnet_ms = 0;
  std::size_t local_bytes = 0, global_bytes = 0;  // peak tensor bytes during the call
  double max_abs_diff = 0;                        // local vs global output (only meaningful for k >= n)
};

// Random supports/queries in the unit cube, one attention layer of width dim.
// Times are the minimum over `repeats` runs.
AttentionMeasurement measure_attention(std::size_t n, std::size_t m, std::size_t k, std::size_t dim,
                                       std::size_t heads, std::size_t repeats, std::uint64_t seed);
std::vector<AttentionMeasurement> run_bench(const ExperimentConfig& cfg);
void write_bench_table(std::ostream& out, const std::vector<AttentionMeasurement>& rows);

}  // namespace eqnet::cli
