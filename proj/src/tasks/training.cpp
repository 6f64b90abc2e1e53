#include "eqnet/tasks/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "eqnet/errors.hpp"
#include "eqnet/numerics/autodiff.hpp"
#include "eqnet/numerics/ops.hpp"
#include "eqnet/numerics/rng.hpp"

namespace eqnet::tasks {

void Dataset::validate() const {
  if (classes < 2) throw ValidationError("dataset: fewer than 2 classes");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    s.cloud.validate();
    if (task == TaskKind::classification) {
      if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes)
        throw ValidationError("sample " + std::to_string(i) + ": label out of range");
    } else {
      if (!s.cloud.has_labels()) throw ValidationError("sample " + std::to_string(i) + ": missing point labels");
      for (int l : s.cloud.labels)
        if (l < 0 || static_cast<std::size_t>(l) >= classes)
          throw ValidationError("sample " + std::to_string(i) + ": point label out of range");
    }
  }
}

std::vector<std::size_t> Dataset::label_histogram() const {
  std::vector<std::size_t> h(classes, 0);
  for (const auto& s : samples) {
    if (task == TaskKind::classification) ++h[static_cast<std::size_t>(s.label)];
    else
      for (int l : s.cloud.labels) ++h[static_cast<std::size_t>(l)];
  }
  return h;
}

Dataset make_classification_dataset(const std::vector<SyntheticShape>& shapes) {
  Dataset d;
  d.task = TaskKind::classification;
  d.classes = kShapeCategories;
  for (const auto& s : shapes) d.samples.push_back(Sample{s.cloud, static_cast<int>(s.category)});
  return d;
}

Dataset make_segmentation_dataset(const std::vector<SyntheticScene>& scenes) {
  Dataset d;
  d.task = TaskKind::segmentation;
  d.classes = kSceneClasses;
  for (const auto& s : scenes) d.samples.push_back(Sample{s.cloud, -1});
  return d;
}

double accuracy(const ConfusionMatrix& cm) {
  std::size_t hit = 0, total = 0;
  for (std::size_t t = 0; t < cm.size(); ++t)
    for (std::size_t p = 0; p < cm[t].size(); ++p) {
      total += cm[t][p];
      if (t == p) hit += cm[t][p];
    }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm) {
  const std::size_t c = cm.size();
  std::vector<std::optional<double>> out(c);
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t truth = 0, predicted = 0;
    for (std::size_t j = 0; j < c; ++j) {
      truth += cm[k][j];
      predicted += cm[j][k];
    }
    if (truth == 0) continue;
    const std::size_t inter = cm[k][k];
    out[k] = static_cast<double>(inter) / static_cast<double>(truth + predicted - inter);
  }
  return out;
}

double mean_iou(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : per_class_iou(cm))
    if (v) {
      sum += *v;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

Metrics metrics_from_confusion(TaskKind task, ConfusionMatrix cm) {
  Metrics m;
  m.task = task;
  m.accuracy = accuracy(cm);
  m.iou = per_class_iou(cm);
  m.miou = mean_iou(cm);
  m.confusion = std::move(cm);
  return m;
}

namespace {

std::size_t argmax_row(const Tensor& t, std::size_t r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.cols(); ++c)
    if (t.at(r, c) > t.at(r, best)) best = c;
  return best;
}

std::vector<int> targets_of(const Sample& s, TaskKind task) {
  if (task == TaskKind::classification) return {s.label};
  return s.cloud.labels;
}

std::string norm_dump(const numerics::ParamStore& store) {
  std::ostringstream os;
  for (const auto& [name, e] : store.entries()) {
    double pn = 0.0, gn = 0.0;
    for (double v : e.param.values()) pn += v * v;
    if (e.param.has_grad())
      for (double g : e.param.grad()) gn += g * g;
    char buf[64];
    std::snprintf(buf, sizeof buf, " |p|=%.4g |g|=%.4g", std::sqrt(pn), std::sqrt(gn));
    os << "\n  " << name << buf;
  }
  return os.str();
}

}  // namespace

Metrics evaluate(const Model& model, const Dataset& data, std::uint64_t eval_seed) {
  if (data.task != model.config().task) throw ConfigError("evaluate: dataset task does not match the model");
  if (data.classes != model.config().classes) throw ConfigError("evaluate: dataset class count does not match");
  numerics::NoGradGuard no_grad;
  ConfusionMatrix cm(data.classes, std::vector<std::size_t>(data.classes, 0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.samples[i];
    const Tensor logits = model.forward(s.cloud, derive_seed(eval_seed, i));
    const auto truth = targets_of(s, data.task);
    for (std::size_t r = 0; r < truth.size(); ++r) ++cm[static_cast<std::size_t>(truth[r])][argmax_row(logits, r)];
  }
  return metrics_from_confusion(data.task, std::move(cm));
}

Metrics majority_baseline(const Dataset& train, const Dataset& test) {
  const auto hist = train.label_histogram();
  const auto majority = static_cast<std::size_t>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  ConfusionMatrix cm(test.classes, std::vector<std::size_t>(test.classes, 0));
  for (const auto& s : test.samples)
    for (int t : targets_of(s, test.task)) ++cm[static_cast<std::size_t>(t)][majority];
  return metrics_from_confusion(test.task, std::move(cm));
}

double scheduled_lr(const TrainConfig& config, std::size_t epoch) {
  if (!config.cosine_schedule || config.epochs <= 1) return config.adam.lr;
  const double t = static_cast<double>(epoch - 1) / static_cast<double>(config.epochs - 1);
  const double f = config.min_lr_factor + (1.0 - config.min_lr_factor) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  return config.adam.lr * f;
}

TrainReport train(Model& model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  if (train_set.task != model.config().task) throw ConfigError("train: dataset task does not match the model");
  if (train_set.size() == 0) throw ValidationError("train: empty training set");
  if (config.batch_size == 0) throw ConfigError("train: batch_size must be positive");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  TrainReport report;
  report.seed = config.seed;
  auto& store = model.store();
  store.zero_grad();

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_start = clock::now();
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(derive_seed(config.seed, "order" + std::to_string(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle.engine());
    const auto epoch_seed = derive_seed(config.seed, static_cast<std::uint64_t>(epoch));
    auto adam = config.adam;
    adam.lr = scheduled_lr(config, epoch);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - b);
      for (std::size_t k = b; k < end; ++k) {
        const auto& s = train_set.samples[order[k]];
        const auto sample_seed = derive_seed(epoch_seed, order[k]);
        const Tensor logits =
            config.augment_rotation
                ? model.forward(randomly_rotated(s.cloud, derive_seed(sample_seed, "augment"),
                                                 train_set.task == TaskKind::segmentation),
                                sample_seed)
                : model.forward(s.cloud, sample_seed);
        const auto targets = targets_of(s, train_set.task);
        const Tensor loss = numerics::cross_entropy(logits, targets);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                               std::to_string(order[k]) + "; parameter norms:" + norm_dump(store));
        }
        loss_sum += value;
        numerics::backward(numerics::scale(loss, scale));
      }
      store.step(adam);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(order.size());
    if (test_set && config.evaluate_each_epoch) rec.test_metric = evaluate(model, *test_set, config.eval_seed).primary();
    rec.seconds = std::chrono::duration<double>(clock::now() - epoch_start).count();
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (config.stop_at && rec.test_metric && *rec.test_metric >= *config.stop_at) break;
  }
  if (test_set) report.final_metrics = evaluate(model, *test_set, config.eval_seed);
  report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return report;
}

void write_report_jsonl(std::ostream& out, const TrainReport& report) {
  for (const auto& e : report.epochs) {
    nlohmann::json j{{"epoch", e.epoch}, {"loss", e.loss}, {"seconds", e.seconds}};
    if (e.test_metric) j["test_metric"] = *e.test_metric;
    out << j.dump() << '\n';
  }
  nlohmann::json summary{{"summary", true},
                         {"seed", report.seed},
                         {"config_hash", report.config_hash},
                         {"epochs", report.epochs.size()},
                         {"wall_seconds", report.wall_seconds}};
  if (report.final_metrics) {
    summary["task"] = task_name(report.final_metrics->task);
    summary["accuracy"] = report.final_metrics->accuracy;
    summary["miou"] = report.final_metrics->miou;
  }
  out << summary.dump() << '\n';
}

void write_metrics_table(std::ostream& out, const Metrics& m) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "task      %s\naccuracy  %.6f\nmIoU      %.6f\n", std::string(task_name(m.task)).c_str(),
                m.accuracy, m.miou);
  out << buf << "\nclass  truth  predicted  correct  IoU\n";
  const std::size_t c = m.confusion.size();
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t truth = 0, pred = 0;
    for (std::size_t j = 0; j < c; ++j) {
      truth += m.confusion[k][j];
      pred += m.confusion[j][k];
    }
    std::snprintf(buf, sizeof buf, "%5zu  %5zu  %9zu  %7zu  ", k, truth, pred, m.confusion[k][k]);
    out << buf;
    if (m.iou[k]) {
      std::snprintf(buf, sizeof buf, "%.6f", *m.iou[k]);
      out << buf << '\n';
    } else {
      out << "-\n";
    }
  }
  out << "\nconfusion (rows = truth, columns = prediction)\n";
  for (const auto& row : m.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
    out << '\n';
  }
}

}  // namespace eqnet::tasks
