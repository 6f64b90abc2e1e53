// eqnet: experiment driver (train, eval, gradcheck, query, bench, gen-data).

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "eqnet/cli/commands.hpp"
#include "eqnet/geometry/pct_io.hpp"

namespace fs = std::filesystem;
using namespace eqnet;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config file");
  if (config_required) opt->required();
  cmd->add_option("--set", c.sets, "override a config value, section.key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "root seed (overrides the config's seed)");
}

cli::ExperimentConfig load(const Common& c, std::vector<std::string> extra = {}) {
  auto sets = c.sets;
  if (c.seed) sets.push_back("seed=" + std::to_string(*c.seed));
  sets.insert(sets.end(), extra.begin(), extra.end());
  return cli::load_config(c.config, sets);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EQ-paradigm point cloud experiments"};
  app.require_subcommand(1);

  Common train_c, eval_c, grad_c, bench_c, gen_c;
  std::string out, data, checkpoint, cloud, positions;
  bool force = false;
  std::optional<double> tolerance;
  std::uint64_t sample_seed = 0;

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train, train_c, true);
  train->add_option("--out", out, "output directory (default: [output] dir)");
  train->add_option("--data", data, "dataset manifest from gen-data (default: generate from [data])");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on held-out data");
  add_common(eval, eval_c, false);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--data", data, "dataset manifest; its test split is evaluated");
  eval->add_option("--out", out, "directory for eval_metrics.txt");
  eval->add_flag("--force", force, "evaluate despite a config or data hash mismatch");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every parameter gradient");
  add_common(grad, grad_c, true);
  grad->add_option("--tolerance", tolerance, "maximum relative error");

  auto* query = app.add_subcommand("query", "features at arbitrary 3D positions");
  query->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  query->add_option("--cloud", cloud, "PCT1 point cloud")->required();
  query->add_option("--positions", positions, "text file, one 'x y z' per line")->required();
  query->add_option("--out", out, "feature file (default: stdout)");
  query->add_option("--sample-seed", sample_seed, "seed of the backbone's sampling");

  auto* bench = app.add_subcommand("bench", "local vs global attention time and memory");
  add_common(bench, bench_c, true);
  bench->add_option("--out", out, "also write the table to this file");

  auto* gen = app.add_subcommand("gen-data", "write the synthetic dataset as PCT1 files");
  add_common(gen, gen_c, true);
  gen->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const auto cfg = load(train_c);
      cli::TrainOptions opts;
      opts.out_dir = out;
      if (!data.empty()) opts.data_manifest = data;
      opts.log = &std::cout;
      cli::run_train(cfg, opts);
      return 0;
    }
    if (*eval) {
      cli::EvalOptions opts;
      opts.checkpoint = checkpoint;
      if (!eval_c.config.empty()) opts.config = load(eval_c);
      if (!data.empty()) opts.data_manifest = data;
      if (!out.empty()) opts.out_dir = out;
      opts.force = force;
      cli::run_eval(opts, &std::cout);
      return 0;
    }
    if (*grad) {
      std::vector<std::string> extra;
      if (tolerance) extra.push_back("gradcheck.tolerance=" + std::to_string(*tolerance));
      const auto outcome = cli::run_gradcheck(load(grad_c, extra));
      cli::write_gradcheck_table(std::cout, outcome);
      return outcome.report.passed() ? 0 : 1;
    }
    if (*query) {
      const auto loaded = cli::load_model(checkpoint);
      const auto pc = geometry::read_pct(fs::path(cloud));
      const auto pos = geometry::read_positions(fs::path(positions));
      const auto result = cli::query_model(*loaded.model, pc, pos, sample_seed);
      if (!result.far.empty()) {
        std::cerr << "warning: " << result.far.size() << " position(s) have no support point within "
                  << result.threshold << " (the cloud's bounding-box diagonal); first is line "
                  << result.far.front() + 1 << '\n';
      }
      if (out.empty()) {
        cli::write_features(std::cout, result.features);
      } else {
        std::ofstream f(out);
        if (!f) throw Error("cannot write " + out);
        cli::write_features(f, result.features);
      }
      return 0;
    }
    if (*bench) {
      const auto rows = cli::run_bench(load(bench_c));
      cli::write_bench_table(std::cout, rows);
      if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw Error("cannot write " + out);
        cli::write_bench_table(f, rows);
      }
      return 0;
    }
    if (*gen) {
      const auto manifest = cli::run_gen_data(load(gen_c), out);
      std::cout << "wrote " << manifest.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return 2;
}
