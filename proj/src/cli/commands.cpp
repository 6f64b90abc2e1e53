#include "eqnet/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "eqnet/geometry/knn.hpp"
#include "eqnet/geometry/pct_io.hpp"
#include "eqnet/numerics/autodiff.hpp"
#include "eqnet/numerics/checkpoint.hpp"
#include "eqnet/numerics/ops.hpp"
#include "eqnet/numerics/rng.hpp"
#include "eqnet/qnet/qnet.hpp"
#include "eqnet/tasks/synthetic.hpp"

namespace eqnet::cli {

namespace fs = std::filesystem;
using numerics::Tensor;
using clock_type = std::chrono::steady_clock;

namespace {

double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string metrics_summary(const tasks::Metrics& m) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "accuracy %.6f  mIoU %.6f", m.accuracy, m.miou);
  return buf;
}

}  // namespace

int exit_code_for(const std::exception& e) noexcept {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const FormatError*>(&e)) return 3;
  if (dynamic_cast<const HashMismatchError*>(&e)) return 4;
  return 1;
}

// checkpoints ------------------------------------------------------------------

void save_model(const fs::path& path, const tasks::Model& model, const ExperimentConfig& cfg) {
  nlohmann::json meta{{"kind", "eqnet-model"},
                      {"config", cfg.canonical()},
                      {"config_hash", cfg.hash()},
                      {"data_hash", cfg.data_hash()}};
  numerics::save_checkpoint(path, model.store(), meta);
}

LoadedModel load_model(const fs::path& path) {
  auto ck = numerics::load_checkpoint(path);
  const auto& meta = ck.metadata;
  if (!meta.is_object() || !meta.contains("config") || !meta["config"].is_string())
    throw FormatError(path.string() + ": checkpoint has no embedded config");
  LoadedModel out;
  try {
    out.config = parse_config(meta["config"].get<std::string>(), path.string() + "#config");
  } catch (const ConfigError& e) {
    throw FormatError(std::string("embedded config is invalid: ") + e.what());
  }
  out.model = std::make_unique<tasks::Model>(model_config(out.config), init_seed(out.config));
  ck.apply_to(out.model->store());
  out.metadata = meta;
  return out;
}

// train ----------------------------------------------------------------------

TrainedModel train_model(const ExperimentConfig& cfg, std::ostream* log) {
  auto [train_set, test_set] = make_datasets(cfg);
  TrainedModel out;
  out.model = std::make_unique<tasks::Model>(model_config(cfg), init_seed(cfg));
  out.baseline = tasks::majority_baseline(train_set, test_set);
  out.report = tasks::train(*out.model, train_set, &test_set, train_config(cfg), [&](const tasks::EpochRecord& r) {
    if (!log) return;
    char buf[128];
    std::snprintf(buf, sizeof buf, "epoch %3zu  loss %.5f  test %.4f  %.1fs\n", r.epoch, r.loss,
                  r.test_metric.value_or(std::nan("")), r.seconds);
    *log << buf << std::flush;
  });
  out.report.config_hash = cfg.hash();
  return out;
}

TrainOutcome run_train(const ExperimentConfig& cfg, const TrainOptions& options) {
  const fs::path dir = options.out_dir.empty() ? fs::path(cfg.output.dir) : options.out_dir;
  fs::create_directories(dir);

  tasks::Dataset train_set, test_set;
  if (options.data_manifest) {
    auto tr = load_manifest_split(*options.data_manifest, "train");
    auto te = load_manifest_split(*options.data_manifest, "test");
    if (tr.data_hash != cfg.data_hash()) {
      throw HashMismatchError("dataset " + options.data_manifest->string() + " has data hash " + tr.data_hash +
                              " but the config describes " + cfg.data_hash());
    }
    train_set = std::move(tr.data);
    test_set = std::move(te.data);
  } else {
    std::tie(train_set, test_set) = make_datasets(cfg);
  }
  if (options.log) {
    *options.log << "config " << cfg.hash() << "  data " << cfg.data_hash() << "  train " << train_set.size()
                 << "  test " << test_set.size() << '\n';
  }

  tasks::Model model(model_config(cfg), init_seed(cfg));
  if (options.log) *options.log << "parameters " << model.store().scalar_count() << '\n';
  TrainOutcome out;
  out.baseline = tasks::majority_baseline(train_set, test_set);
  out.report = tasks::train(model, train_set, &test_set, train_config(cfg), [&](const tasks::EpochRecord& r) {
    if (!options.log) return;
    char buf[128];
    std::snprintf(buf, sizeof buf, "epoch %3zu  loss %.5f  test %.4f  %.1fs\n", r.epoch, r.loss,
                  r.test_metric.value_or(std::nan("")), r.seconds);
    *options.log << buf << std::flush;
  });
  out.report.config_hash = cfg.hash();
  out.metrics = *out.report.final_metrics;

  out.checkpoint = dir / "checkpoint.eqck";
  save_model(out.checkpoint, model, cfg);
  write_text(dir / "config.ini", cfg.canonical());
  {
    auto f = open_out(dir / "report.jsonl");
    tasks::write_report_jsonl(f, out.report);
  }
  {
    auto f = open_out(dir / "metrics.txt");
    tasks::write_metrics_table(f, out.metrics);
  }
  if (options.log) {
    *options.log << "final  " << metrics_summary(out.metrics) << "  (majority baseline "
                 << metrics_summary(out.baseline) << ")\n"
                 << "wrote " << dir.string() << '\n';
  }
  return out;
}

// datasets ---------------------------------------------------------------------

fs::path run_gen_data(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto [train_set, test_set] = make_datasets(cfg);
  nlohmann::json manifest{{"task", tasks::task_name(cfg.task)},
                          {"classes", train_set.classes},
                          {"data_hash", cfg.data_hash()},
                          {"config_hash", cfg.hash()}};
  for (const auto& [split, data] : {std::pair{"train", &train_set}, std::pair{"test", &test_set}}) {
    fs::create_directories(out_dir / split);
    auto list = nlohmann::json::array();
    for (std::size_t i = 0; i < data->size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "%06zu.pct", i);
      const fs::path rel = fs::path(split) / name;
      geometry::write_pct(out_dir / rel, data->samples[i].cloud, cfg.output.binary);
      list.push_back({{"file", rel.generic_string()}, {"label", data->samples[i].label}});
    }
    manifest[split] = std::move(list);
  }
  const fs::path path = out_dir / "manifest.json";
  write_text(path, manifest.dump(2) + "\n");
  return path;
}

ManifestSplit load_manifest_split(const fs::path& manifest, const std::string& split) {
  std::ifstream in(manifest);
  if (!in) throw FormatError("cannot open dataset manifest " + manifest.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  ManifestSplit out;
  try {
    out.data.task = tasks::parse_task(j.at("task").get<std::string>());
    out.data.classes = j.at("classes").get<std::size_t>();
    out.data_hash = j.at("data_hash").get<std::string>();
    const auto base = manifest.parent_path();
    for (const auto& e : j.at(split)) {
      out.data.samples.push_back(
          tasks::Sample{geometry::read_pct(base / e.at("file").get<std::string>()), e.at("label").get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  out.data.validate();
  return out;
}

// eval -------------------------------------------------------------------------

tasks::Metrics run_eval(const EvalOptions& options, std::ostream* log) {
  auto loaded = load_model(options.checkpoint);
  const std::string ck_hash = loaded.metadata.value("config_hash", "");
  const std::string ck_data = loaded.metadata.value("data_hash", "");
  if (ck_hash != loaded.config.hash()) {
    throw FormatError(options.checkpoint.string() + ": stored config hash " + ck_hash +
                      " does not match its embedded config");
  }
  ExperimentConfig data_cfg = loaded.config;
  if (options.config) {
    if (options.config->hash() != ck_hash) {
      if (!options.force) {
        throw HashMismatchError("config hash " + options.config->hash() + " differs from the checkpoint's " +
                                ck_hash + "; the checkpoint was trained under another config (use --force to "
                                          "evaluate anyway)");
      }
      if (log) *log << "warning: config hash mismatch ignored (--force)\n";
    }
    data_cfg = *options.config;
  }

  tasks::Dataset test_set;
  if (options.data_manifest) {
    auto split = load_manifest_split(*options.data_manifest, "test");
    if (split.data_hash != ck_data) {
      if (!options.force) {
        throw HashMismatchError("dataset data hash " + split.data_hash + " differs from the checkpoint's " + ck_data +
                                "; it was generated with other data settings (use --force to evaluate anyway)");
      }
      if (log) *log << "warning: data hash mismatch ignored (--force)\n";
    }
    test_set = std::move(split.data);
  } else {
    test_set = make_datasets(data_cfg).second;
  }
  if (test_set.task != loaded.config.task || test_set.classes != model_config(loaded.config).classes)
    throw ConfigError("dataset task or class count does not match the checkpoint");

  const auto metrics = tasks::evaluate(*loaded.model, test_set, eval_seed(loaded.config));
  if (log) tasks::write_metrics_table(*log, metrics);
  if (options.out_dir) {
    fs::create_directories(*options.out_dir);
    auto f = open_out(*options.out_dir / "eval_metrics.txt");
    tasks::write_metrics_table(f, metrics);
  }
  return metrics;
}

// gradcheck --------------------------------------------------------------------

GradcheckOutcome run_gradcheck(const ExperimentConfig& cfg) {
  const auto& g = cfg.gradcheck;
  if (cfg.embedding.width > 8) throw ConfigError("gradcheck: [embedding] width must be at most 8");
  if (g.points > 16) throw ConfigError("gradcheck: [gradcheck] points must be at most 16");

  geometry::PointCloud cloud;
  std::vector<int> targets;
  const auto data_seed = derive_seed(cfg.seed, "gradcheck");
  if (cfg.task == tasks::TaskKind::classification) {
    const auto shapes = tasks::generate_shapes(1, data_seed, tasks::ShapeConfig{g.points, g.points, cfg.data.jitter});
    cloud = shapes[0].cloud;
    targets = {static_cast<int>(shapes[0].category)};
  } else {
    tasks::SceneConfig sc;
    sc.points = g.points;
    sc.min_shapes = 1;
    sc.max_shapes = 2;
    const auto scenes = tasks::generate_scenes(1, data_seed, sc);
    cloud = scenes[0].cloud;
    targets = cloud.labels;
  }

  tasks::Model model(model_config(cfg), init_seed(cfg));
  numerics::GradCheckOptions opts;
  opts.step = g.step;
  opts.tolerance = g.tolerance;
  if (!g.corrupt.empty()) {
    if (!model.store().contains(g.corrupt)) throw ConfigError("gradcheck: no parameter named '" + g.corrupt + "'");
    opts.corrupt_param = g.corrupt;
  }
  const auto sample_seed = derive_seed(cfg.seed, "sample");
  const auto start = clock_type::now();
  GradcheckOutcome out;
  out.report = numerics::finite_difference_check(
      [&] { return numerics::cross_entropy(model.forward(cloud, sample_seed), targets); }, model.store(), opts);
  out.seconds = ms_since(start) / 1000.0;
  out.tolerance = g.tolerance;
  out.scalars = model.store().scalar_count();
  return out;
}

void write_gradcheck_table(std::ostream& out, const GradcheckOutcome& o) {
  std::size_t width = 9;
  for (const auto& p : o.report.params) width = std::max(width, p.name.size());
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %7s  %12s  %12s  %s\n", static_cast<int>(width), "parameter", "count",
                "max_rel_err", "max_abs_err", "status");
  out << buf;
  for (const auto& p : o.report.params) {
    std::snprintf(buf, sizeof buf, "%-*s  %7zu  %12.3e  %12.3e  %s\n", static_cast<int>(width), p.name.c_str(),
                  p.count, p.max_rel_error, p.max_abs_error, p.passed ? "ok" : "FAIL");
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "\n%zu parameter groups, %zu scalars, max relative error %.3e (tolerance %.1e), %.1fs\n",
                o.report.params.size(), o.scalars, o.report.max_rel_error, o.tolerance, o.seconds);
  out << buf << (o.report.passed() ? "PASS\n" : "FAIL\n");
}

// query ------------------------------------------------------------------------

QueryOutcome query_model(const tasks::Model& model, const geometry::PointCloud& cloud,
                         std::span<const geometry::Vec3> positions, std::uint64_t sample_seed) {
  cloud.validate();
  if (positions.empty()) throw ValidationError("query: no positions");
  numerics::NoGradGuard no_grad;
  QueryOutcome out;
  const auto support = model.embed(cloud, sample_seed);
  out.features = model.query_features(support, positions);
  const auto box = geometry::bounding_box(cloud.positions);
  out.threshold = std::sqrt(geometry::squared_distance(box.min, box.max));
  // Finest support level: if even its nearest point is beyond the cloud's
  // diagonal, every neighbour of every level is.
  const auto& finest = support.levels.front().points;
  const auto nearest = geometry::k_nearest_neighbors(positions, finest, 1);
  for (std::size_t i = 0; i < positions.size(); ++i)
    if (nearest.distance_at(i, 0) > out.threshold) out.far.push_back(i);
  return out;
}

void write_features(std::ostream& out, const Tensor& features) {
  char buf[32];
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (std::size_t c = 0; c < features.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", features.at(r, c));
      out << (c ? " " : "") << buf;
    }
    out << '\n';
  }
}

// bench ------------------------------------------------------------------------

AttentionMeasurement measure_attention(std::size_t n, std::size_t m, std::size_t k, std::size_t dim,
                                       std::size_t heads, std::size_t repeats, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "bench-data"));
  auto points = [&](std::size_t count) {
    std::vector<geometry::Vec3> p(count);
    for (auto& v : p) v = {rng.uniform(), rng.uniform(), rng.uniform()};
    return p;
  };
  auto features = [&](std::size_t rows) {
    std::vector<double> v(rows * dim);
    for (auto& x : v) x = rng.normal();
    return Tensor::from({rows, dim}, std::move(v));
  };
  const auto X = points(n);
  const auto Y = points(m);
  const Tensor FX = features(n), FY = features(m);

  numerics::ParamStore store(derive_seed(seed, "bench-params"));
  const auto attn = qnet::AttentionParams::create(store, "bench.attn", dim, heads);
  const auto rpe = qnet::RpeParams::create(store, "bench.rpe", heads, dim / heads, numerics::Activation::gelu);
  qnet::QNetConfig qc;
  qc.dim = dim;
  qc.heads = heads;
  qc.neighbors = k;
  const auto qparams = qnet::QNetParams::create(store, "bench.qnet", qc);

  numerics::NoGradGuard no_grad;
  AttentionMeasurement r;
  r.n = n;
  r.m = m;
  r.k = k;
  r.knn_ms = r.local_ms = r.global_ms = r.qnet_ms = INFINITY;
  Tensor local_out, global_out;
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    auto t0 = clock_type::now();
    const auto table = geometry::k_nearest_neighbors(Y, X, k);
    r.knn_ms = std::min(r.knn_ms, ms_since(t0));

    numerics::MemoryTracker::reset_peak();
    auto base = numerics::MemoryTracker::current();
    t0 = clock_type::now();
    local_out = qnet::attention(Y, FY, X, FX, attn, rpe, &table);
    r.local_ms = std::min(r.local_ms, ms_since(t0));
    r.local_bytes = std::max(r.local_bytes, numerics::MemoryTracker::peak() - base);

    numerics::MemoryTracker::reset_peak();
    base = numerics::MemoryTracker::current();
    t0 = clock_type::now();
    global_out = qnet::attention(Y, FY, X, FX, attn, rpe, nullptr);
    r.global_ms = std::min(r.global_ms, ms_since(t0));
    r.global_bytes = std::max(r.global_bytes, numerics::MemoryTracker::peak() - base);

    t0 = clock_type::now();
    (void)qnet::q_net_forward(Y, qnet::SupportSet{X, FX, 0}, qparams);
    r.qnet_ms = std::min(r.qnet_ms, ms_since(t0));
  }
  const auto a = local_out.values(), b = global_out.values();
  for (std::size_t i = 0; i < a.size(); ++i) r.max_abs_diff = std::max(r.max_abs_diff, std::abs(a[i] - b[i]));
  return r;
}

std::vector<AttentionMeasurement> run_bench(const ExperimentConfig& cfg) {
  const auto& b = cfg.bench;
  std::vector<AttentionMeasurement> rows;
  for (std::size_t n : b.sizes)
    rows.push_back(measure_attention(n, b.queries, b.neighbors, b.dim, b.heads, b.repeats, cfg.seed));
  return rows;
}

void write_bench_table(std::ostream& out, const std::vector<AttentionMeasurement>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%6s %6s %4s  %9s %10s %11s %10s  %13s %13s %8s\n", "n", "m", "K", "knn_ms",
                "local_ms", "global_ms", "qnet_ms", "local_bytes", "global_bytes", "mem_x");
  out << buf;
  for (const auto& r : rows) {
    const double ratio = r.local_bytes ? static_cast<double>(r.global_bytes) / static_cast<double>(r.local_bytes) : 0;
    std::snprintf(buf, sizeof buf, "%6zu %6zu %4zu  %9.3f %10.3f %11.3f %10.3f  %13zu %13zu %8.1f\n", r.n, r.m, r.k,
                  r.knn_ms, r.local_ms, r.global_ms, r.qnet_ms, r.local_bytes, r.global_bytes, ratio);
    out << buf;
  }
  out << "\nlocal attention holds m x K pair terms, global m x n; mem_x = global_bytes / local_bytes\n";
}

}  // namespace eqnet::cli
