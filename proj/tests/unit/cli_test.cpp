#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "eqnet/cli/commands.hpp"
#include "eqnet/geometry/pct_io.hpp"
#include "eqnet/tasks/synthetic.hpp"

using namespace eqnet;
using namespace eqnet::cli;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"(
task = classification
seed = 3
[data]
train = 8
test = 4
[embedding]
samples = 16, 4
group = 8, 4
width = 8
[qnet]
blocks = 1
neighbors = 4
[head]
hidden = 8
[train]
epochs = 1
batch = 4
)";

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("eqnet_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class F>
std::string error_text(F f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, TaskAloneGivesDefaults) {
  const auto cfg = parse_config("task = segmentation\n");
  EXPECT_EQ(cfg.task, tasks::TaskKind::segmentation);
  EXPECT_EQ(cfg.qnet.neighbors, 16u);
  EXPECT_EQ(cfg.train.epochs, 30u);
}

TEST(Config, CanonicalFormRoundTrips) {
  const auto cfg = parse_config(kTiny);
  const auto again = parse_config(cfg.canonical());
  EXPECT_EQ(again.canonical(), cfg.canonical());
  EXPECT_EQ(again.hash(), cfg.hash());
}

TEST(Config, HashIgnoresLayoutAndComments) {
  const auto a = parse_config("task = classification\n[train]\nlr = 0.003\nepochs = 30\n");
  const auto b = parse_config("# comment\n  task=classification  \n\n[train]\n; other\nepochs=30\nlr = 3e-3\n");
  EXPECT_EQ(a.hash(), b.hash());
}

TEST(Config, HashTracksValues) {
  const auto a = parse_config(kTiny);
  const auto b = parse_config(kTiny, "tiny", {"train.lr=0.01"});
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.data_hash(), b.data_hash());  // training settings do not change the data
  const auto c = parse_config(kTiny, "tiny", {"data.seed=2"});
  EXPECT_NE(a.data_hash(), c.data_hash());
}

TEST(Config, UnknownKeyReportsLine) {
  const std::string msg = error_text([] { parse_config("task = classification\n[train]\nepochz = 3\n", "x.ini"); });
  EXPECT_NE(msg.find("x.ini:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("epochz"), std::string::npos) << msg;
  EXPECT_THROW(parse_config("task = classification\n[training]\n"), ConfigError);
  EXPECT_THROW(parse_config("task = classification\nepochs = 3\n"), ConfigError);
}

TEST(Config, MissingTaskNamesTheField) {
  const std::string msg = error_text([] { parse_config("[train]\nepochs = 3\n", "x.ini"); });
  EXPECT_NE(msg.find("task"), std::string::npos) << msg;
  ConfigError e("");
  EXPECT_EQ(exit_code_for(e), 2);
}

TEST(Config, RejectsBadValuesAndDuplicates) {
  EXPECT_THROW(parse_config("task = classification\n[train]\nlr = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("task = classification\n[train]\nepochs = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("task = classification\n[train]\ncosine = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("task = classification\ntask = segmentation\n"), ConfigError);
  EXPECT_THROW(parse_config("task = detection\n"), ConfigError);
  EXPECT_THROW(parse_config("task = classification\n[embedding\n"), ConfigError);
  EXPECT_THROW(parse_config("task = classification\n[train]\nepochs\n"), ConfigError);
}

TEST(Config, OverridesApplyAndValidate) {
  const auto cfg = parse_config(kTiny, "tiny", {"qnet.blocks=2", "seed=9"});
  EXPECT_EQ(cfg.qnet.blocks, 2u);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_THROW(parse_config(kTiny, "tiny", {"qnet.bogus=1"}), ConfigError);
  EXPECT_THROW(parse_config(kTiny, "tiny", {"qnet.blocks"}), ConfigError);
  EXPECT_THROW(parse_config(kTiny, "tiny", {"qnet.heads=3"}), ConfigError);  // 8 % 3 != 0
}

TEST(Config, ListsAcceptCommasOrSpaces) {
  const auto a = parse_config("task = classification\n[embedding]\nsamples = 64, 16\ngroup = 8\n");
  const auto b = parse_config("task = classification\n[embedding]\nsamples = 64 16\ngroup = 8\n");
  EXPECT_EQ(a.embedding.samples, (std::vector<std::size_t>{64, 16}));
  EXPECT_EQ(a.hash(), b.hash());
  const auto mc = model_config(a);
  ASSERT_EQ(mc.point.levels.size(), 2u);
  EXPECT_EQ(mc.point.levels[1].group, 8u);  // single value applies to every level
  EXPECT_THROW(parse_config("task = classification\n[embedding]\nsamples = 64, 16, 4\ngroup = 8, 4\n"), ConfigError);
}

TEST(Config, EveryKeyIsCanonical) {
  const auto cfg = parse_config("task = classification\n");
  const auto text = cfg.canonical();
  for (const auto& key : config_keys()) {
    const auto dot = key.find('.');
    const std::string bare = dot == std::string::npos ? key : key.substr(dot + 1);
    EXPECT_NE(text.find(bare + " = "), std::string::npos) << key;
  }
}

TEST(ExitCodes, MapErrorClasses) {
  EXPECT_EQ(exit_code_for(FormatError("x")), 3);
  EXPECT_EQ(exit_code_for(HashMismatchError("x")), 4);
  EXPECT_EQ(exit_code_for(ValidationError("x")), 1);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), 1);
}

class Trained : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(temp_dir("trained"));
    TrainOptions o;
    o.out_dir = *dir_ / "run";
    outcome_ = new TrainOutcome(run_train(parse_config(kTiny), o));
  }
  static void TearDownTestSuite() {
    fs::remove_all(dir_->parent_path());
    delete outcome_;
    delete dir_;
  }
  static fs::path* dir_;
  static TrainOutcome* outcome_;
};

fs::path* Trained::dir_ = nullptr;
TrainOutcome* Trained::outcome_ = nullptr;

TEST_F(Trained, WritesArtifacts) {
  for (const char* f : {"checkpoint.eqck", "report.jsonl", "metrics.txt", "config.ini"})
    EXPECT_TRUE(fs::exists(*dir_ / "run" / f)) << f;
  EXPECT_EQ(parse_config(slurp(*dir_ / "run" / "config.ini")).hash(), parse_config(kTiny).hash());
}

TEST_F(Trained, EvalReproducesFinalMetric) {
  EvalOptions e;
  e.checkpoint = outcome_->checkpoint;
  const auto m = run_eval(e);
  EXPECT_EQ(m.accuracy, outcome_->metrics.accuracy);
  EXPECT_EQ(m.miou, outcome_->metrics.miou);
  EXPECT_EQ(m.confusion, outcome_->metrics.confusion);
}

TEST_F(Trained, CheckpointRestoresTheModel) {
  const auto loaded = load_model(outcome_->checkpoint);
  EXPECT_EQ(loaded.config.hash(), parse_config(kTiny).hash());
  tasks::Model fresh(model_config(loaded.config), 12345);
  EXPECT_EQ(fresh.store().scalar_count(), loaded.model->store().scalar_count());
  for (const auto& [name, entry] : loaded.model->store().entries()) {
    const auto& other = fresh.store().get(name);
    EXPECT_EQ(entry.param.shape(), other.shape()) << name;
  }
}

TEST_F(Trained, CorruptMagicIsAFormatError) {
  const auto bad = *dir_ / "bad.eqck";
  fs::copy_file(outcome_->checkpoint, bad, fs::copy_options::overwrite_existing);
  {
    std::fstream f(bad, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOPE", 4);
  }
  EvalOptions e;
  e.checkpoint = bad;
  try {
    run_eval(e);
    FAIL() << "expected a format error";
  } catch (const std::exception& ex) {
    EXPECT_EQ(exit_code_for(ex), 3);
  }
}

TEST_F(Trained, ConfigHashMismatchNeedsForce) {
  EvalOptions e;
  e.checkpoint = outcome_->checkpoint;
  e.config = parse_config(kTiny, "tiny", {"train.lr=0.5"});
  EXPECT_THROW(run_eval(e), HashMismatchError);
  e.force = true;
  EXPECT_NO_THROW(run_eval(e));
}

TEST_F(Trained, ManifestDataHashIsChecked) {
  const auto same = run_gen_data(parse_config(kTiny), *dir_ / "same");
  const auto other = run_gen_data(parse_config(kTiny, "tiny", {"data.seed=5"}), *dir_ / "other");
  EvalOptions e;
  e.checkpoint = outcome_->checkpoint;
  e.data_manifest = same;
  EXPECT_EQ(run_eval(e).accuracy, outcome_->metrics.accuracy);  // same data as regenerated
  e.data_manifest = other;
  EXPECT_THROW(run_eval(e), HashMismatchError);
  e.force = true;
  EXPECT_NO_THROW(run_eval(e));
}

TEST_F(Trained, PerClassIouMatchesDumpedConfusion) {
  std::istringstream in(slurp(*dir_ / "run" / "metrics.txt"));
  std::string line;
  std::vector<double> printed;
  std::vector<std::vector<std::size_t>> cm;
  bool in_table = false, in_confusion = false;
  while (std::getline(in, line)) {
    if (line.rfind("class", 0) == 0) {
      in_table = true;
      continue;
    }
    if (line.rfind("confusion", 0) == 0) {
      in_confusion = true;
      continue;
    }
    if (line.empty()) {
      in_table = false;
      continue;
    }
    std::istringstream row(line);
    if (in_confusion) {
      std::vector<std::size_t> r;
      std::size_t v;
      while (row >> v) r.push_back(v);
      cm.push_back(r);
    } else if (in_table) {
      std::string k, t, p, c, iou;
      row >> k >> t >> p >> c >> iou;
      printed.push_back(iou == "-" ? -1.0 : std::stod(iou));
    }
  }
  ASSERT_EQ(cm.size(), 4u);
  ASSERT_EQ(printed.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    std::size_t truth = 0, pred = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      truth += cm[k][j];
      pred += cm[j][k];
    }
    if (truth == 0) {
      EXPECT_EQ(printed[k], -1.0);
      continue;
    }
    const double iou = static_cast<double>(cm[k][k]) / static_cast<double>(truth + pred - cm[k][k]);
    EXPECT_NEAR(printed[k], iou, 5e-7) << "class " << k;
  }
}

TEST_F(Trained, QueryRowsAreIndependent) {
  const auto loaded = load_model(outcome_->checkpoint);
  const auto cloud = tasks::generate_shapes(1, 4)[0].cloud;
  const std::vector<geometry::Vec3> q{{0, 0, 0}, {0.5, 0.1, -0.2}, {0.5, 0.1, -0.2}, {2, 2, 2}};
  const auto full = query_model(*loaded.model, cloud, q, 7);
  ASSERT_EQ(full.features.rows(), 4u);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto one = query_model(*loaded.model, cloud, std::span(q).subspan(i, 1), 7);
    for (std::size_t c = 0; c < full.features.cols(); ++c) EXPECT_EQ(one.features.at(0, c), full.features.at(i, c));
  }
  EXPECT_TRUE(full.far.empty());
}

TEST_F(Trained, FarQueriesAreFiniteAndFlagged) {
  const auto loaded = load_model(outcome_->checkpoint);
  const auto cloud = tasks::generate_shapes(1, 4)[0].cloud;
  const std::vector<geometry::Vec3> q{{0, 0, 0}, {1e3, -1e3, 1e3}};
  const auto r = query_model(*loaded.model, cloud, q, 7);
  ASSERT_EQ(r.far, std::vector<std::size_t>{1});
  for (double v : r.features.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST_F(Trained, QueryOnOwnPointsMatchesTheEvalFeaturePath) {
  const auto loaded = load_model(outcome_->checkpoint);
  const auto cloud = tasks::generate_shapes(1, 4)[0].cloud;
  const auto& model = *loaded.model;
  const auto seed = 21u;
  const auto queries = model.select_queries(cloud, seed);
  numerics::NoGradGuard g;
  const auto direct = model.query_features(cloud, queries, seed);
  const auto via = query_model(model, cloud, queries, seed).features;
  ASSERT_EQ(direct.shape(), via.shape());
  for (std::size_t i = 0; i < direct.values().size(); ++i) EXPECT_EQ(direct.values()[i], via.values()[i]);
}

TEST(GenData, ManifestRoundTripsExactly) {
  const auto dir = temp_dir("gen");
  const auto cfg = parse_config("task = segmentation\n[data]\ntrain = 3\ntest = 2\n");
  const auto manifest = run_gen_data(cfg, dir);
  const auto split = load_manifest_split(manifest, "train");
  const auto expected = make_datasets(cfg).first;
  EXPECT_EQ(split.data_hash, cfg.data_hash());
  ASSERT_EQ(split.data.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(split.data.samples[i].cloud.positions, expected.samples[i].cloud.positions);
    EXPECT_EQ(split.data.samples[i].cloud.labels, expected.samples[i].cloud.labels);
    EXPECT_EQ(split.data.samples[i].cloud.attributes, expected.samples[i].cloud.attributes);
  }
  fs::remove_all(dir);
}

TEST(GenData, MalformedManifestIsAFormatError) {
  const auto dir = temp_dir("badmanifest");
  std::ofstream(dir / "manifest.json") << "{ not json";
  EXPECT_THROW(load_manifest_split(dir / "manifest.json", "test"), FormatError);
  std::ofstream(dir / "m2.json") << R"({"task": "classification"})";
  EXPECT_THROW(load_manifest_split(dir / "m2.json", "test"), FormatError);
  fs::remove_all(dir);
}

TEST(Gradcheck, SmallConfigPassesAndFaultFails) {
  const char* small = R"(
task = segmentation
[embedding]
samples = 8, 4
group = 4
width = 8
[qnet]
blocks = 2
neighbors = 4
[head]
hidden = 8
[gradcheck]
points = 12
)";
  const auto ok = run_gradcheck(parse_config(small));
  EXPECT_TRUE(ok.report.passed()) << ok.report.max_rel_error;
  const auto bad = run_gradcheck(parse_config(small, "small", {"gradcheck.corrupt=head.mlp.fc1.weight"}));
  EXPECT_FALSE(bad.report.passed());
  EXPECT_THROW(run_gradcheck(parse_config(small, "small", {"gradcheck.corrupt=nope"})), ConfigError);
  EXPECT_THROW(run_gradcheck(parse_config(small, "small", {"embedding.width=16"})), ConfigError);
  EXPECT_THROW(run_gradcheck(parse_config(small, "small", {"gradcheck.points=17"})), ConfigError);
}

TEST(Bench, LocalMemoryScalesWithK) {
  const auto small = measure_attention(64, 32, 16, 8, 2, 1, 1);
  const auto large = measure_attention(1024, 32, 16, 8, 2, 1, 1);
  EXPECT_GT(large.global_bytes, 8 * small.global_bytes);  // grows with n
  // only the n x d support tensors grow locally; the m x n score terms do not
  EXPECT_LT(large.local_bytes - small.local_bytes, (large.global_bytes - small.global_bytes) / 8);
  const auto exact = measure_attention(20, 8, 20, 8, 2, 1, 2);
  EXPECT_LE(exact.max_abs_diff, 1e-10);
}

TEST(Bench, TableFormatIsStable) {
  const std::vector<AttentionMeasurement> rows{measure_attention(64, 16, 8, 8, 2, 1, 3)};
  std::ostringstream a, b;
  write_bench_table(a, rows);
  write_bench_table(b, rows);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("     n      m    K", 0), 0u);
}
