#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "eqnet/numerics/param_store.hpp"
#include "eqnet/tasks/model.hpp"
#include "eqnet/tasks/synthetic.hpp"

namespace eqnet::tasks {

struct Sample {
  PointCloud cloud;  // segmentation samples carry per-point labels
  int label = -1;    // classification target
};

struct Dataset {
  TaskKind task = TaskKind::classification;
  std::size_t classes = 0;
  std::vector<Sample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  void validate() const;
  // Label counts over objects (classification) or points (segmentation).
  std::vector<std::size_t> label_histogram() const;
};

Dataset make_classification_dataset(const std::vector<SyntheticShape>& shapes);
Dataset make_segmentation_dataset(const std::vector<SyntheticScene>& scenes);

// ---- metrics ----

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;  // [truth][prediction]

double accuracy(const ConfusionMatrix& cm);
// IoU per class, nullopt for classes absent from the ground truth.
std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm);
// Mean of per_class_iou over classes present in the ground truth.
double mean_iou(const ConfusionMatrix& cm);

struct Metrics {
  TaskKind task = TaskKind::classification;
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double miou = 0.0;
  std::vector<std::optional<double>> iou;

  // accuracy for classification, mIoU for segmentation
  double primary() const { return task == TaskKind::classification ? accuracy : miou; }
};

Metrics metrics_from_confusion(TaskKind task, ConfusionMatrix cm);

// Sample i is evaluated with sample seed derive_seed(eval_seed, i).
Metrics evaluate(const Model& model, const Dataset& data, std::uint64_t eval_seed = 0);

// Predicts the most frequent training label everywhere.
Metrics majority_baseline(const Dataset& train, const Dataset& test);

// ---- training ----

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  numerics::AdamConfig adam{};
  // Cosine decay of the learning rate from adam.lr (first epoch) to
  // adam.lr * min_lr_factor (last epoch); off means a constant rate.
  bool cosine_schedule = false;
  double min_lr_factor = 0.05;
  // Rigid-pose augmentation of training clouds: a fresh random rotation per
  // sample and epoch (any rotation for classification, about z otherwise).
  bool augment_rotation = false;
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 0;
  bool evaluate_each_epoch = true;
  // Stop once the held-out metric reaches this value (checked after each epoch).
  std::optional<double> stop_at;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean training loss
  std::optional<double> test_metric;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::uint64_t seed = 0;
  std::string config_hash;
  double wall_seconds = 0.0;
  std::optional<Metrics> final_metrics;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

double scheduled_lr(const TrainConfig& config, std::size_t epoch);

// Mini-batch loop: each sample's cross-entropy is scaled by 1/batch and
// back-propagated, then one Adam step per batch. The sample order of epoch e
// is a shuffle seeded by derive_seed(seed, "order" + e); the forward seed of
// sample i in epoch e is derive_seed(derive_seed(seed, e), i). A non-finite
// loss throws NumericalError listing parameter and gradient norms.
TrainReport train(Model& model, const Dataset& train_set, const Dataset* test_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Line-delimited JSON: one {"epoch": ...} record per epoch, then a summary.
void write_report_jsonl(std::ostream& out, const TrainReport& report);
// Plain-text per-class table with the confusion matrix.
void write_metrics_table(std::ostream& out, const Metrics& metrics);

}  // namespace eqnet::tasks
