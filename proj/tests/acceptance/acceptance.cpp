// End-to-end acceptance checks. One line per criterion:
//   [N] PASS|FAIL  name  (details)  seconds
// Exit status is 0 only if every selected criterion passes.

#include <CLI11.hpp>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "eqnet/cli/commands.hpp"
#include "eqnet/geometry/knn.hpp"
#include "eqnet/geometry/sampling.hpp"
#include "eqnet/geometry/voxel.hpp"
#include "eqnet/numerics/autodiff.hpp"
#include "eqnet/qnet/qnet.hpp"
#include "eqnet/tasks/synthetic.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace eqnet;
using geometry::Vec3;
using numerics::Tensor;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path config_path(const std::string& name) { return fs::path(EQNET_SOURCE_DIR) / "configs" / name; }

cli::ExperimentConfig config(const std::string& name, std::vector<std::string> sets = {}) {
  return cli::load_config(config_path(name), sets);
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("eqnet_acceptance_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor random_features(Rng& rng, std::size_t rows, std::size_t cols) {
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.normal();
  return Tensor::from({rows, cols}, std::move(v));
}

// Random points; every other instance snaps to a coarse lattice so duplicate
// points and distance ties show up.
std::vector<Vec3> instance_points(Rng& rng, std::size_t n, bool lattice) {
  auto pts = eqnet::testing::random_points(rng, n);
  if (lattice)
    for (auto& p : pts)
      for (auto& c : p) c = std::round(c * 3) / 3;
  return pts;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double d = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

// 1 -------------------------------------------------------------------------

Result gradient_correctness() {
  const auto out = cli::run_gradcheck(config("gradcheck.ini"));
  const bool ok = out.report.passed() && out.report.max_rel_error < 1e-4 && out.seconds < 60;
  return {ok, fmt("%zu groups, %zu scalars, max rel err %.2e (< 1e-4), %.1fs (< 60s)", out.report.params.size(),
                  out.scalars, out.report.max_rel_error, out.seconds)};
}

// 2 -------------------------------------------------------------------------

geometry::PointCloud sample_cloud(tasks::TaskKind task, std::uint64_t seed) {
  if (task == tasks::TaskKind::classification) return tasks::generate_shapes(1, seed)[0].cloud;
  return tasks::generate_scenes(1, seed)[0].cloud;
}

Result query_independence() {
  std::vector<std::unique_ptr<tasks::Model>> models;
  const std::vector<std::pair<std::string, std::vector<std::string>>> random_models{
      {"classification.ini", {"embedding.width=16"}},
      {"segmentation.ini", {"embedding.width=16"}},
      {"classification.ini", {"embedding.type=voxel", "embedding.levels=2", "embedding.width=16"}},
      {"segmentation.ini", {"embedding.type=voxel", "embedding.width=16"}},
      {"segmentation.ini", {"qnet.neighbors=0", "embedding.width=8"}},
  };
  for (std::size_t i = 0; i < random_models.size(); ++i) {
    auto sets = random_models[i].second;
    sets.push_back("seed=" + std::to_string(100 + i));
    const auto cfg = config(random_models[i].first, sets);
    models.push_back(std::make_unique<tasks::Model>(cli::model_config(cfg), cli::init_seed(cfg)));
  }
  auto trained = cli::train_model(
      config("hierarchy.ini", {"train.epochs=2", "data.train=16", "data.test=4", "embedding.width=16"}));
  models.push_back(std::move(trained.model));

  constexpr std::size_t kSubsets = 100;
  double worst = 0.0;
  std::size_t runs = 0;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const auto& model = *models[mi];
    Rng rng(derive_seed(2024, mi));
    const auto cloud = sample_cloud(model.config().task, derive_seed(7, mi));
    const auto box = geometry::bounding_box(cloud.positions);
    std::vector<Vec3> q;
    for (int i = 0; i < 24; ++i) {  // anywhere around the cloud
      Vec3 p;
      for (int c = 0; c < 3; ++c) {
        const double pad = 0.5 * (box.max[c] - box.min[c]);
        p[c] = rng.uniform(box.min[c] - pad, box.max[c] + pad);
      }
      q.push_back(p);
    }
    for (int i = 0; i < 24; ++i) q.push_back(cloud.positions[rng.index(cloud.size())]);  // on the cloud
    for (int i = 0; i < 8; ++i) q.push_back({rng.uniform(20, 40), rng.uniform(-40, -20), rng.uniform(20, 40)});
    for (int i = 0; i < 8; ++i) q.push_back(q[rng.index(q.size())]);  // duplicates

    const auto seed = derive_seed(99, mi);
    const Tensor full = cli::query_model(model, cloud, q, seed).features;
    for (std::size_t s = 0; s < kSubsets; ++s) {
      std::vector<std::size_t> idx(q.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng.engine());
      idx.resize(1 + rng.index(q.size()));
      std::vector<Vec3> sub;
      for (auto i : idx) sub.push_back(q[i]);
      const Tensor part = cli::query_model(model, cloud, sub, seed).features;
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < full.cols(); ++c)
          worst = std::max(worst, std::abs(part.at(r, c) - full.at(idx[r], c)));
      ++runs;
    }
  }
  return {worst <= 1e-12, fmt("%zu models (5 random, 1 trained), %zu subset runs, max |diff| %.3e (<= 1e-12)",
                              models.size(), runs, worst)};
}

// 3 -------------------------------------------------------------------------

Result local_global_equivalence() {
  double worst_attn = 0.0, worst_qnet = 0.0;
  for (std::size_t inst = 0; inst < 50; ++inst) {
    Rng rng(derive_seed(303, inst));
    const std::size_t n = 1 + rng.index(48), m = 1 + rng.index(32);
    const std::size_t k = n + rng.index(4);  // K >= n, padding when K > n
    const std::size_t heads = std::size_t{1} << rng.index(3), dim = heads * (2 + 2 * rng.index(2));
    const auto X = instance_points(rng, n, inst % 2 == 1);
    const auto Y = instance_points(rng, m, inst % 4 == 1);
    const Tensor FX = random_features(rng, n, dim), FY = random_features(rng, m, dim);

    numerics::ParamStore store(derive_seed(304, inst));
    const auto attn = qnet::AttentionParams::create(store, "a", dim, heads);
    const auto rpe = qnet::RpeParams::create(store, "r", heads, dim / heads, numerics::Activation::gelu);
    qnet::QNetConfig qc;
    qc.dim = dim;
    qc.heads = heads;
    qc.blocks = 2;
    qc.neighbors = k;
    const auto local_net = qnet::QNetParams::create(store, "q", qc);
    auto global_net = local_net;
    global_net.config.neighbors = 0;

    numerics::NoGradGuard no_grad;
    const auto table = geometry::k_nearest_neighbors(Y, X, k);
    worst_attn = std::max(worst_attn, max_abs_diff(qnet::attention(Y, FY, X, FX, attn, rpe, &table),
                                                   qnet::attention(Y, FY, X, FX, attn, rpe, nullptr)));
    const qnet::SupportSet support{X, FX, 0};
    worst_qnet = std::max(worst_qnet, max_abs_diff(qnet::q_net_forward(Y, support, local_net),
                                                   qnet::q_net_forward(Y, support, global_net)));
  }
  const auto mem = cli::measure_attention(4096, 256, 16, 16, 2, 1, 5);
  const double ratio = static_cast<double>(mem.global_bytes) / static_cast<double>(mem.local_bytes);
  const bool ok = worst_attn <= 1e-10 && worst_qnet <= 1e-10 && ratio >= 10.0;
  return {ok, fmt("50 instances: attention %.2e, full Q-Net %.2e (<= 1e-10); n=4096 K=16: pair terms 256x fewer, "
                  "peak %zu vs %zu bytes = %.1fx (>= 10x)",
                  worst_attn, worst_qnet, mem.local_bytes, mem.global_bytes, ratio)};
}

// 4 -------------------------------------------------------------------------

Result geometry_oracles() {
  std::size_t fps_ok = 0, knn_ok = 0, vox_ok = 0;
  for (std::size_t inst = 0; inst < 200; ++inst) {
    Rng rng(derive_seed(404, inst));
    const bool lattice = inst % 2 == 1;
    {
      const std::size_t n = 1 + rng.index(200), k = 1 + rng.index(n);
      const auto pts = instance_points(rng, n, lattice);
      const auto seed = rng.next();
      const auto picks = geometry::farthest_point_sampling(pts, k, seed);
      if (picks.size() == k && picks.front() == geometry::fps_first_index(n, seed) &&
          eqnet::testing::fps_matches_greedy_oracle(pts, picks))
        ++fps_ok;
    }
    {
      const std::size_t n = 1 + rng.index(200), m = 1 + rng.index(50), k = 1 + rng.index(n + 4);
      const auto src = instance_points(rng, n, lattice), tgt = instance_points(rng, m, !lattice);
      const auto table = geometry::k_nearest_neighbors(tgt, src, k);
      bool ok = table.rows == m && table.k == k && eqnet::testing::knn_matches_oracle(table, tgt, src, k);
      for (std::size_t i = 0; ok && i < m; ++i)
        for (std::size_t s = n; s < k; ++s)  // padding repeats the nearest source
          ok = ok && table.is_padded(i, s) && table.at(i, s) == table.at(i, 0);
      if (ok) ++knn_ok;
    }
    {
      const std::size_t n = 1 + rng.index(200);
      const auto pts = instance_points(rng, n, lattice);
      const Vec3 cell{rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.8), rng.uniform(0.05, 0.8)};
      if (eqnet::testing::voxel_partition_matches_oracle(geometry::voxelize(pts, cell), pts)) ++vox_ok;
    }
  }
  const bool ok = fps_ok == 200 && knn_ok == 200 && vox_ok == 200;
  return {ok, fmt("FPS %zu/200, KNN %zu/200, voxel %zu/200 exact matches", fps_ok, knn_ok, vox_ok)};
}

// 5 -------------------------------------------------------------------------

Result head_embedding_interchange() {
  struct Combo {
    const char* name;
    const char* file;
    std::vector<std::string> sets;
  };
  const std::vector<std::string> cls_small{"embedding.width=16", "data.train=128", "data.test=64", "train.epochs=5",
                                           "train.eval_each_epoch=false"};
  const std::vector<std::string> seg_small{"embedding.width=16", "data.train=24", "data.test=8", "train.epochs=5",
                                           "train.eval_each_epoch=false"};
  auto with = [](std::vector<std::string> base, std::vector<std::string> extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
  };
  const std::vector<Combo> combos{
      {"point/cls", "classification.ini", cls_small},
      {"voxel/cls", "classification.ini", with(cls_small, {"embedding.type=voxel", "embedding.levels=2"})},
      {"point/seg", "segmentation.ini", seg_small},
      {"voxel/seg", "segmentation.ini", with(seg_small, {"embedding.type=voxel", "embedding.levels=3"})},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : combos) {
    try {
      const auto t = cli::train_model(config(c.file, c.sets));
      const double acc = t.report.final_metrics->accuracy, base = t.baseline.accuracy;
      ok = ok && acc > base;
      detail += fmt("%s %.3f vs %.3f; ", c.name, acc, base);
    } catch (const std::exception& e) {
      ok = false;
      detail += fmt("%s error: %s; ", c.name, e.what());
    }
  }
  return {ok, detail + "(accuracy vs majority baseline)"};
}

// 6 -------------------------------------------------------------------------

Result desk_scale_learning() {
  const auto cls = cli::train_model(config("classification.ini"));
  const auto seg = cli::train_model(config("segmentation.ini"));
  const double acc = cls.report.final_metrics->accuracy, miou = seg.report.final_metrics->miou;
  const bool ok = acc >= 0.95 && cls.report.wall_seconds < 300 && cls.report.epochs.size() <= 30 && miou >= 0.90 &&
                  seg.report.wall_seconds < 600 && seg.report.epochs.size() <= 30;
  return {ok, fmt("classification acc %.4f (>= 0.95) in %zu epochs, %.0fs (< 300s); segmentation mIoU %.4f (>= 0.90) "
                  "in %zu epochs, %.0fs (< 600s)",
                  acc, cls.report.epochs.size(), cls.report.wall_seconds, miou, seg.report.epochs.size(),
                  seg.report.wall_seconds)};
}

// 7 -------------------------------------------------------------------------

Result hierarchical_trend() {
  double sum1 = 0, sum3 = 0;
  std::string runs;
  for (int seed = 0; seed < 3; ++seed) {
    const std::string s = "seed=" + std::to_string(seed);
    const double m3 = cli::train_model(config("hierarchy.ini", {s})).report.final_metrics->miou;
    const double m1 =
        cli::train_model(config("hierarchy.ini", {s, "embedding.samples=256", "embedding.group=8"}))
            .report.final_metrics->miou;
    sum3 += m3;
    sum1 += m1;
    runs += fmt("%.3f/%.3f ", m3, m1);
  }
  return {sum3 / 3 >= sum1 / 3,
          fmt("mean mIoU 3 levels %.4f >= 1 level %.4f (per seed 3/1: %s)", sum3 / 3, sum1 / 3, runs.c_str())};
}

// 8 -------------------------------------------------------------------------

std::string strip_timing(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line, out;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    j.erase("seconds");
    j.erase("wall_seconds");
    out += j.dump() + "\n";
  }
  return out;
}

bool same_metrics(const tasks::Metrics& a, const tasks::Metrics& b) {
  return a.confusion == b.confusion && std::memcmp(&a.accuracy, &b.accuracy, sizeof(double)) == 0 &&
         std::memcmp(&a.miou, &b.miou, sizeof(double)) == 0 && a.iou == b.iou;
}

Result determinism() {
  std::vector<std::string> failed;
  const auto cfg = config("classification.ini",
                          {"embedding.width=16", "data.train=48", "data.test=16", "train.epochs=3", "seed=11"});
  const auto d1 = scratch_dir("det1"), d2 = scratch_dir("det2");

  cli::TrainOptions o1, o2;
  o1.out_dir = d1 / "run";
  o2.out_dir = d2 / "run";
  const auto t1 = cli::run_train(cfg, o1), t2 = cli::run_train(cfg, o2);
  if (!same_metrics(t1.metrics, t2.metrics)) failed.push_back("train metrics");
  if (slurp(o1.out_dir / "checkpoint.eqck") != slurp(o2.out_dir / "checkpoint.eqck")) failed.push_back("checkpoint");
  if (slurp(o1.out_dir / "metrics.txt") != slurp(o2.out_dir / "metrics.txt")) failed.push_back("metrics.txt");
  if (strip_timing(slurp(o1.out_dir / "report.jsonl")) != strip_timing(slurp(o2.out_dir / "report.jsonl")))
    failed.push_back("report");

  cli::EvalOptions e;
  e.checkpoint = t1.checkpoint;
  const auto m1 = cli::run_eval(e), m2 = cli::run_eval(e);
  if (!same_metrics(m1, m2) || !same_metrics(m1, t1.metrics)) failed.push_back("eval");

  const auto g1 = cli::run_gradcheck(config("gradcheck.ini")), g2 = cli::run_gradcheck(config("gradcheck.ini"));
  bool same_grad = g1.report.params.size() == g2.report.params.size();
  for (std::size_t i = 0; same_grad && i < g1.report.params.size(); ++i)
    same_grad = g1.report.params[i].max_rel_error == g2.report.params[i].max_rel_error &&
                g1.report.params[i].max_abs_error == g2.report.params[i].max_abs_error;
  if (!same_grad) failed.push_back("gradcheck");

  const auto loaded = cli::load_model(t1.checkpoint);
  const auto cloud = sample_cloud(tasks::TaskKind::classification, 3);
  const std::vector<Vec3> q{{0, 0, 0}, {0.3, -0.2, 0.5}, {5, 5, 5}};
  if (max_abs_diff(cli::query_model(*loaded.model, cloud, q, 1).features,
                   cli::query_model(*loaded.model, cloud, q, 1).features) != 0.0)
    failed.push_back("query");

  const auto gen = config("segmentation.ini", {"data.train=4", "data.test=2"});
  const auto man1 = cli::run_gen_data(gen, d1 / "data"), man2 = cli::run_gen_data(gen, d2 / "data");
  bool same_data = slurp(man1) == slurp(man2);
  for (const auto& entry : fs::recursive_directory_iterator(d1 / "data"))
    if (entry.is_regular_file())
      same_data = same_data && slurp(entry.path()) == slurp(d2 / "data" / fs::relative(entry.path(), d1 / "data"));
  if (!same_data) failed.push_back("gen-data");

  const auto b1 = cli::measure_attention(512, 64, 16, 8, 2, 1, 3), b2 = cli::measure_attention(512, 64, 16, 8, 2, 1, 3);
  if (b1.local_bytes != b2.local_bytes || b1.global_bytes != b2.global_bytes) failed.push_back("bench memory");

  fs::remove_all(d1.parent_path());
  std::string detail = "train, eval, gradcheck, query, gen-data, bench memory repeated with identical config and seed";
  if (!failed.empty()) {
    detail += "; differs:";
    for (const auto& f : failed) detail += " " + f;
  } else {
    detail += ": bit-identical";
  }
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "run only these criteria (1-8)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"query independence", query_independence},
      {"local/global attention equivalence", local_global_equivalence},
      {"geometry kernel oracles", geometry_oracles},
      {"head x embedding interchange", head_embedding_interchange},
      {"desk-scale learning", desk_scale_learning},
      {"hierarchical trend", hierarchical_trend},
      {"determinism", determinism},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "[" << id << "] " << (r.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << "  (" << r.detail
              << ")  " << fmt("%.1fs", s) << std::endl;
    all = all && r.pass;
  }
  return all ? 0 : 1;
}
