#include "eqnet/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/rng.hpp"
#include "eqnet/tasks/synthetic.hpp"

namespace eqnet::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void parse_value(std::string_view s, std::size_t& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("expected a non-negative integer, got '" + std::string(s) + "'");
}

void parse_value(std::string_view s, double& out) {
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ConfigError("expected a number, got '" + std::string(s) + "'");
}

void parse_value(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") out = true;
  else if (s == "false" || s == "0" || s == "no" || s == "off") out = false;
  else throw ConfigError("expected true or false, got '" + std::string(s) + "'");
}

void parse_value(std::string_view s, std::string& out) { out = std::string(s); }

void parse_value(std::string_view s, std::vector<std::size_t>& out) {
  out.clear();
  std::string item;
  auto flush = [&] {
    if (item.empty()) return;
    std::size_t v = 0;
    parse_value(item, v);
    out.push_back(v);
    item.clear();
  };
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') flush();
    else item.push_back(c);
  }
  flush();
  if (out.empty()) throw ConfigError("expected a list of integers");
}

void parse_value(std::string_view s, tasks::TaskKind& out) { out = tasks::parse_task(s); }
void parse_value(std::string_view s, tasks::EmbeddingKind& out) { out = tasks::parse_embedding(s); }
void parse_value(std::string_view s, tasks::VoteMode& out) { out = tasks::parse_vote_mode(s); }

std::string format_value(std::size_t v) { return std::to_string(v); }
std::string format_value(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
std::string format_value(bool v) { return v ? "true" : "false"; }
std::string format_value(const std::string& v) { return v; }
std::string format_value(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}
std::string format_value(tasks::TaskKind v) { return std::string(tasks::task_name(v)); }
std::string format_value(tasks::EmbeddingKind v) { return std::string(tasks::embedding_name(v)); }
std::string format_value(tasks::VoteMode v) { return std::string(tasks::vote_mode_name(v)); }

struct Field {
  std::string section;  // empty = top level
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;

  std::string name() const { return section.empty() ? key : section + "." + key; }
};

template <class Get>
Field field(std::string section, std::string key, Get get) {
  return Field{std::move(section), std::move(key),
               [get](ExperimentConfig& c, std::string_view v) { parse_value(v, get(c)); },
               [get](const ExperimentConfig& c) { return format_value(get(c)); }};
}

#define EQ_FIELD(section, key, member) field(section, key, [](auto& c) -> auto& { return c.member; })

const std::vector<Field>& fields() {
  static const std::vector<Field> all = [] {
    std::vector<Field> f{
        EQ_FIELD("", "task", task),
        EQ_FIELD("", "seed", seed),
        EQ_FIELD("data", "seed", data.seed),
        EQ_FIELD("data", "train", data.train),
        EQ_FIELD("data", "test", data.test),
        EQ_FIELD("data", "min_points", data.min_points),
        EQ_FIELD("data", "max_points", data.max_points),
        EQ_FIELD("data", "scene_points", data.scene_points),
        EQ_FIELD("data", "min_shapes", data.min_shapes),
        EQ_FIELD("data", "max_shapes", data.max_shapes),
        EQ_FIELD("data", "jitter", data.jitter),
        EQ_FIELD("embedding", "type", embedding.type),
        EQ_FIELD("embedding", "samples", embedding.samples),
        EQ_FIELD("embedding", "group", embedding.group),
        EQ_FIELD("embedding", "width", embedding.width),
        EQ_FIELD("embedding", "cell", embedding.cell),
        EQ_FIELD("embedding", "levels", embedding.levels),
        EQ_FIELD("qnet", "blocks", qnet.blocks),
        EQ_FIELD("qnet", "heads", qnet.heads),
        EQ_FIELD("qnet", "neighbors", qnet.neighbors),
        EQ_FIELD("qnet", "ffn_mult", qnet.ffn_mult),
        EQ_FIELD("head", "hidden", head.hidden),
        EQ_FIELD("head", "vote", head.vote),
        EQ_FIELD("head", "queries", head.queries),
        EQ_FIELD("train", "epochs", train.epochs),
        EQ_FIELD("train", "batch", train.batch),
        EQ_FIELD("train", "lr", train.lr),
        EQ_FIELD("train", "cosine", train.cosine),
        EQ_FIELD("train", "min_lr_factor", train.min_lr_factor),
        EQ_FIELD("train", "augment", train.augment),
        EQ_FIELD("train", "eval_each_epoch", train.eval_each_epoch),
        EQ_FIELD("gradcheck", "points", gradcheck.points),
        EQ_FIELD("gradcheck", "step", gradcheck.step),
        EQ_FIELD("gradcheck", "tolerance", gradcheck.tolerance),
        EQ_FIELD("gradcheck", "corrupt", gradcheck.corrupt),
        EQ_FIELD("bench", "sizes", bench.sizes),
        EQ_FIELD("bench", "queries", bench.queries),
        EQ_FIELD("bench", "neighbors", bench.neighbors),
        EQ_FIELD("bench", "dim", bench.dim),
        EQ_FIELD("bench", "heads", bench.heads),
        EQ_FIELD("bench", "repeats", bench.repeats),
        EQ_FIELD("output", "dir", output.dir),
        EQ_FIELD("output", "binary", output.binary),
    };
    std::sort(f.begin(), f.end(), [](const Field& a, const Field& b) {
      return std::pair(a.section, a.key) < std::pair(b.section, b.key);
    });
    return f;
  }();
  return all;
}

#undef EQ_FIELD

const Field* find_field(std::string_view section, std::string_view key) {
  for (const auto& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

bool known_section(std::string_view section) {
  for (const auto& f : fields())
    if (!f.section.empty() && f.section == section) return true;
  return false;
}

std::string section_lines(const ExperimentConfig& cfg, std::string_view only = {}) {
  std::string out;
  std::string current = "\x01";
  for (const auto& f : fields()) {
    if (!only.empty() && f.section != only) continue;
    if (f.section != current) {
      if (!f.section.empty()) out += (out.empty() ? "" : "\n") + ("[" + f.section + "]\n");
      current = f.section;
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.name());
  return keys;
}

std::string ExperimentConfig::canonical() const { return section_lines(*this); }

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(canonical())); }

std::string ExperimentConfig::data_hash() const {
  return hex64(fnv1a64("task = " + format_value(task) + "\n" + section_lines(*this, "data")));
}

void ExperimentConfig::validate() const {
  if (data.train == 0 || data.test == 0) throw ConfigError("[data] train and test counts must be positive");
  if (task == tasks::TaskKind::classification) {
    tasks::ShapeConfig{data.min_points, data.max_points, data.jitter}.validate();
  } else {
    tasks::SceneConfig sc;
    sc.points = data.scene_points;
    sc.min_shapes = data.min_shapes;
    sc.max_shapes = data.max_shapes;
    sc.jitter = data.jitter;
    sc.validate();
  }
  if (embedding.width < 2) throw ConfigError("[embedding] width must be at least 2");
  if (embedding.type == tasks::EmbeddingKind::point && embedding.group.size() != 1 &&
      embedding.group.size() != embedding.samples.size()) {
    throw ConfigError("[embedding] group needs one value or one per entry of samples");
  }
  if (qnet.heads == 0 || embedding.width % qnet.heads != 0)
    throw ConfigError("[qnet] heads must divide [embedding] width");
  if (embedding.type == tasks::EmbeddingKind::voxel && embedding.levels == 0)
    throw ConfigError("[embedding] levels must be positive");
  if (train.epochs == 0 || train.batch == 0) throw ConfigError("[train] epochs and batch must be positive");
  if (!(train.lr > 0)) throw ConfigError("[train] lr must be positive");
  if (!(train.min_lr_factor >= 0 && train.min_lr_factor <= 1))
    throw ConfigError("[train] min_lr_factor must be in [0, 1]");
  if (gradcheck.points == 0 || !(gradcheck.step > 0) || !(gradcheck.tolerance > 0))
    throw ConfigError("[gradcheck] points, step and tolerance must be positive");
  if (bench.queries == 0 || bench.repeats == 0 || bench.heads == 0 || bench.dim % bench.heads != 0)
    throw ConfigError("[bench] needs queries, repeats > 0 and dim divisible by heads");
  model_config(*this).validate();
}

ExperimentConfig parse_config(std::string_view text, std::string_view source,
                              const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string section;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> ConfigError {
    return ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": " + msg);
  };
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) throw fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw fail("expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const Field* f = find_field(section, key);
    if (!f) {
      throw fail("unknown key '" + key + "'" + (section.empty() ? " at top level" : " in [" + section + "]"));
    }
    if (!seen.insert(f->name()).second) throw fail("duplicate key '" + f->name() + "'");
    try {
      f->set(cfg, value);
    } catch (const ConfigError& e) {
      throw fail(f->name() + ": " + e.what());
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + o + ": expected key=value");
    const std::string name(trim(std::string_view(o).substr(0, eq)));
    const auto dot = name.find('.');
    const std::string sec = dot == std::string::npos ? "" : name.substr(0, dot);
    const std::string key = dot == std::string::npos ? name : name.substr(dot + 1);
    const Field* f = find_field(sec, key);
    if (!f) throw ConfigError("--set: unknown key '" + name + "'");
    try {
      f->set(cfg, trim(std::string_view(o).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("--set " + name + ": " + e.what());
    }
    seen.insert(f->name());
  }
  if (!seen.count("task")) throw ConfigError(std::string(source) + ": missing required key 'task'");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), overrides);
}

tasks::ModelConfig model_config(const ExperimentConfig& cfg) {
  tasks::ModelConfig mc;
  mc.task = cfg.task;
  mc.embedding = cfg.embedding.type;
  const std::size_t w = cfg.embedding.width;
  const auto& e = cfg.embedding;
  mc.point.levels.clear();
  for (std::size_t l = 0; l < e.samples.size(); ++l) {
    embedding::PointLevelConfig lc;
    lc.samples = e.samples[l];
    lc.group = e.group.size() == 1 ? e.group[0] : (l < e.group.size() ? e.group[l] : 0);
    lc.widths = l == 0 ? std::vector<std::size_t>{w / 2, w} : std::vector<std::size_t>{w};
    mc.point.levels.push_back(lc);
  }
  mc.voxel.cell_size = e.cell;
  mc.voxel.stem_widths = {w / 2, w};
  mc.voxel.level_widths.assign(e.levels > 0 ? e.levels - 1 : 0, w);
  mc.qnet.blocks = cfg.qnet.blocks;
  mc.qnet.heads = cfg.qnet.heads;
  mc.qnet.neighbors = cfg.qnet.neighbors;
  mc.qnet.ffn_mult = cfg.qnet.ffn_mult;
  mc.head_hidden = cfg.head.hidden;
  mc.vote = cfg.head.vote;
  mc.vote_queries = cfg.head.queries;
  mc.any_query_count = cfg.head.queries != tasks::kVoteQueries;
  if (cfg.task == tasks::TaskKind::classification) {
    mc.classes = tasks::kShapeCategories;
    mc.attribute_dim = 0;
  } else {
    mc.classes = tasks::kSceneClasses;
    mc.attribute_dim = 1;
  }
  return mc;
}

tasks::TrainConfig train_config(const ExperimentConfig& cfg) {
  tasks::TrainConfig tc;
  tc.epochs = cfg.train.epochs;
  tc.batch_size = cfg.train.batch;
  tc.adam.lr = cfg.train.lr;
  tc.cosine_schedule = cfg.train.cosine;
  tc.min_lr_factor = cfg.train.min_lr_factor;
  tc.augment_rotation = cfg.train.augment;
  tc.evaluate_each_epoch = cfg.train.eval_each_epoch;
  tc.seed = derive_seed(cfg.seed, "train");
  tc.eval_seed = eval_seed(cfg);
  return tc;
}

std::pair<tasks::Dataset, tasks::Dataset> make_datasets(const ExperimentConfig& cfg) {
  const auto& d = cfg.data;
  const auto train_seed = derive_seed(d.seed, "train"), test_seed = derive_seed(d.seed, "test");
  if (cfg.task == tasks::TaskKind::classification) {
    const tasks::ShapeConfig sc{d.min_points, d.max_points, d.jitter};
    return {tasks::make_classification_dataset(tasks::generate_shapes(d.train, train_seed, sc)),
            tasks::make_classification_dataset(tasks::generate_shapes(d.test, test_seed, sc))};
  }
  tasks::SceneConfig sc;
  sc.points = d.scene_points;
  sc.min_shapes = d.min_shapes;
  sc.max_shapes = d.max_shapes;
  sc.jitter = d.jitter;
  return {tasks::make_segmentation_dataset(tasks::generate_scenes(d.train, train_seed, sc)),
          tasks::make_segmentation_dataset(tasks::generate_scenes(d.test, test_seed, sc))};
}

std::uint64_t init_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, "init"); }
std::uint64_t eval_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, "eval"); }

}  // namespace eqnet::cli
