#include "gatetrain/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "gatetrain/errors.hpp"
#include "gatetrain/kernels.hpp"
#include "gatetrain/random.hpp"

namespace gatetrain {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (criterion_test_accuracy &&
      !(*criterion_test_accuracy > 0.0 && *criterion_test_accuracy <= 1.0)) {
    throw ConfigError("criterion accuracy must be in (0, 1]");
  }
  if (criterion_group && *criterion_group >= test_class_groups.size()) {
    throw ConfigError("criterion group out of range");
  }
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::CriterionReached ? "criterion_reached"
                                                : "epoch_budget_exhausted";
}

namespace {

void check_dataset(const Mlp& mlp, const LabeledDataset& ds, const char* what) {
  if (ds.empty()) return;
  if (ds.feature_dim != mlp.input_dim()) {
    throw ShapeError(std::string(what) + " features (" + std::to_string(ds.feature_dim) +
                     ") != network input (" + std::to_string(mlp.input_dim()) + ")");
  }
  const std::size_t max_label = *std::max_element(ds.labels.begin(), ds.labels.end());
  if (max_label >= mlp.n_classes()) {
    throw ShapeError(std::string(what) + " label " + std::to_string(max_label) +
                     " exceeds network outputs");
  }
}

}  // namespace

TrainResult train(Mlp mlp, const LabeledDataset& train_set, const LabeledDataset& test_set,
                  const TrainConfig& config, std::optional<MistakeMemory> memory) {
  config.validate();
  mlp.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  check_dataset(mlp, train_set, "training set");
  check_dataset(mlp, test_set, "test set");
  if (config.criterion_test_accuracy && test_set.empty()) {
    throw ConfigError("a test-accuracy criterion needs a test set");
  }
  if (!config.plastic.empty()) {
    if (config.plastic.size() != mlp.layers.size()) {
      throw ShapeError("plastic mask needs one flag per layer");
    }
    mlp.plastic = config.plastic;
  }

  const std::size_t n = train_set.size();
  TrainResult result;
  result.memory = memory ? std::move(*memory) : MistakeMemory(n);
  if (result.memory.size() != n) {
    throw ShapeError("mistake memory has " + std::to_string(result.memory.size()) +
                     " flags for " + std::to_string(n) + " samples");
  }
  result.metrics = RunMetrics(n);
  RunMetrics& metrics = result.metrics;

  const std::size_t plastic_params = mlp.plastic_parameter_count();
  const std::size_t eval_every = config.eval_every ? config.eval_every : n;
  const double criterion = config.criterion_test_accuracy.value_or(2.0);

  auto take_snapshot = [&](std::size_t epoch, bool epoch_end) {
    Snapshot s;
    s.epoch = epoch;
    s.forward_steps = metrics.forward_steps;
    s.update_steps = metrics.update_steps;
    s.m1_energy = metrics.m1_energy;
    s.unique_mistakes = unique_mistake_count(result.memory);
    const bool want_train =
        config.train_accuracy == TrainAccuracyCadence::EverySnapshot ||
        (config.train_accuracy == TrainAccuracyCadence::EpochEnd && epoch_end);
    if (want_train) s.train_accuracy = accuracy(kernels::predict_all(mlp, train_set), train_set);
    if (!test_set.empty()) {
      const auto preds = kernels::predict_all(mlp, test_set);
      s.test_accuracy = accuracy(preds, test_set);
      for (const auto& group : config.test_class_groups) {
        s.group_accuracy.push_back(group_accuracy(preds, test_set, group));
      }
    }
    const double watched = config.criterion_group
                               ? (*config.criterion_group < s.group_accuracy.size()
                                      ? s.group_accuracy[*config.criterion_group]
                                      : kNotMeasured)
                               : s.test_accuracy;
    metrics.snapshots.push_back(std::move(s));
    return watched >= criterion;
  };

  auto finish = [&](StopReason reason) {
    result.stop = reason;
    result.network = std::move(mlp);
    return std::move(result);
  };

  if (config.snapshot_at_start && take_snapshot(0, false)) {
    return finish(StopReason::CriterionReached);
  }

  Rng rng(config.shuffle_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  ForwardTrace trace;
  GradientSet grads = zero_gradients(mlp);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t pos = order[step];
      const std::size_t id = train_set.ids[pos];
      const std::size_t label = train_set.labels[pos];

      forward(mlp, train_set.sample(pos), trace);
      ++metrics.forward_steps;
      if (gate_decision(config.policy, id, predict(trace), label, result.memory)) {
        backward(mlp, trace, label, grads, GradientScope::PlasticOnly);
        record_update(metrics, apply_update(mlp, grads, config.lr), id, plastic_params);
      }

      const bool epoch_end = step + 1 == n;
      if (metrics.forward_steps % eval_every == 0 || epoch_end) {
        if (epoch_end) ++metrics.epochs_completed;
        if (take_snapshot(epoch, epoch_end)) return finish(StopReason::CriterionReached);
      }
    }
  }
  return finish(StopReason::EpochBudgetExhausted);
}

std::vector<std::optional<std::size_t>> steps_to_group_accuracy(
    std::span<const Snapshot> snapshots, std::size_t group, std::span<const double> targets) {
  std::vector<std::optional<std::size_t>> out;
  for (double target : targets) {
    std::optional<std::size_t> hit;
    for (const auto& s : snapshots) {
      const double acc = group < s.group_accuracy.size() ? s.group_accuracy[group] : kNotMeasured;
      if (acc >= target) {
        hit = s.update_steps;
        break;
      }
    }
    out.push_back(hit);
  }
  return out;
}

const Snapshot* first_reaching(std::span<const Snapshot> snapshots, double target) {
  for (const auto& s : snapshots) {
    if (s.test_accuracy >= target) return &s;
  }
  return nullptr;
}

std::vector<std::optional<std::size_t>> steps_to_accuracy(std::span<const Snapshot> snapshots,
                                                          std::span<const double> targets) {
  std::vector<std::optional<std::size_t>> out;
  for (double target : targets) {
    const Snapshot* s = first_reaching(snapshots, target);
    out.push_back(s ? std::optional(s->update_steps) : std::nullopt);
  }
  return out;
}

// --- incremental -----------------------------------------------------------

namespace {

TrainConfig continuation_config(const IncrementalConfig& config) {
  TrainConfig cfg = config.continuation;
  cfg.test_class_groups = {config.pretrain_classes, config.new_classes};
  return cfg;
}

}  // namespace

void IncrementalConfig::validate(std::size_t n_classes) const {
  if (pretrain_classes.empty() || new_classes.empty()) {
    throw ConfigError("incremental learning needs old and new classes");
  }
  std::vector<int> seen(n_classes, 0);
  for (const auto* set : {&pretrain_classes, &new_classes}) {
    for (auto c : *set) {
      if (c >= n_classes) throw ConfigError("class " + std::to_string(c) + " out of range");
      if (seen[c]++) throw ConfigError("class " + std::to_string(c) + " listed twice");
    }
  }
  pretrain.validate();
  continuation_config(*this).validate();
}

TrainResult pretrain_incremental(Mlp mlp, const LabeledDataset& full_train,
                                 const LabeledDataset& test, const IncrementalConfig& config) {
  config.validate(mlp.n_classes());
  const auto old_train = filter_classes(full_train, config.pretrain_classes);
  const auto old_test = filter_classes(test, config.pretrain_classes);
  return train(std::move(mlp), old_train, old_test, config.pretrain);
}

TrainResult continue_incremental(const TrainResult& phase1, const LabeledDataset& full_train,
                                 const LabeledDataset& test, const IncrementalConfig& config,
                                 const LabeledDataset* phase2_subset) {
  Mlp mlp = phase1.network;
  config.validate(mlp.n_classes());

  TrainConfig cfg = continuation_config(config);
  if (config.freeze_hidden_on_continue) {
    std::fill(mlp.plastic.begin(), mlp.plastic.end(), true);
    mlp.freeze_hidden();
    cfg.plastic = mlp.plastic;
  } else if (cfg.plastic.empty()) {
    cfg.plastic.assign(mlp.layers.size(), true);
  }

  const LabeledDataset& phase2 = phase2_subset ? *phase2_subset : full_train;
  MistakeMemory memory(phase2.size());
  if (!config.reset_memory_on_continue) {
    // Phase-1 ids index the class-filtered set, whose source ids are
    // full-set ids; a phase-2 subset's source ids are full-set ids too.
    constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
    std::vector<std::size_t> full_to_phase2(full_train.size(), kAbsent);
    for (std::size_t i = 0; i < phase2.size(); ++i) {
      full_to_phase2[phase2_subset ? phase2.source_ids[i] : phase2.ids[i]] = phase2.ids[i];
    }
    const auto old_train = filter_classes(full_train, config.pretrain_classes);
    if (phase1.memory.size() != old_train.size()) {
      throw ShapeError("phase-1 memory does not match the pretraining set");
    }
    for (std::size_t i = 0; i < old_train.size(); ++i) {
      const std::size_t target = full_to_phase2[old_train.source_ids[i]];
      if (phase1.memory.flagged(i) && target != kAbsent) memory.mark(target);
    }
  }
  return train(std::move(mlp), phase2, test, cfg, std::move(memory));
}

IncrementalResult incremental_train(Mlp mlp, const LabeledDataset& full_train,
                                    const LabeledDataset& test, const IncrementalConfig& config) {
  IncrementalResult r;
  r.pretrain = pretrain_incremental(std::move(mlp), full_train, test, config);
  r.continuation = continue_incremental(r.pretrain, full_train, test, config);
  return r;
}

}  // namespace gatetrain
