#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gatetrain/datasets.hpp"
#include "gatetrain/gating.hpp"
#include "gatetrain/metrics.hpp"
#include "gatetrain/netcore.hpp"

namespace gatetrain {

/// When snapshots measure accuracy on the full training set (one full pass
/// over it, which dominates run time when snapshots are frequent).
enum class TrainAccuracyCadence {
  EverySnapshot,
  EpochEnd,
  Never,
};

struct TrainConfig {
  double lr = 0.01;
  std::size_t max_epochs = 1;
  /// Stop at the first snapshot whose test accuracy reaches this value.
  std::optional<double> criterion_test_accuracy;
  /// Apply the criterion to this test class group instead of the whole set.
  std::optional<std::size_t> criterion_group;
  /// Forward steps between snapshots; 0 means one epoch.
  std::size_t eval_every = 0;
  std::uint64_t shuffle_seed = 0;
  GatePolicy policy = GatePolicy::Always;
  /// Per-layer plasticity; empty keeps the network's own flags.
  std::vector<bool> plastic;
  TrainAccuracyCadence train_accuracy = TrainAccuracyCadence::EverySnapshot;
  /// Test accuracy is additionally reported per class group in each snapshot.
  std::vector<std::vector<std::size_t>> test_class_groups;
  /// Take a snapshot before the first training step.
  bool snapshot_at_start = false;

  void validate() const;
};

enum class StopReason { CriterionReached, EpochBudgetExhausted };

std::string_view to_string(StopReason reason);

struct TrainResult {
  RunMetrics metrics;
  StopReason stop = StopReason::EpochBudgetExhausted;
  Mlp network;
  MistakeMemory memory;
};

/// Single-sample online SGD. Each epoch visits the training set in a fresh
/// seeded permutation; every visit is a forward step, and a gate-approved
/// visit is followed by backward + apply_update. `memory` continues an
/// earlier run's mistake record; it must cover every training id.
TrainResult train(Mlp mlp, const LabeledDataset& train_set, const LabeledDataset& test_set,
                  const TrainConfig& config, std::optional<MistakeMemory> memory = std::nullopt);

/// Update steps at the first snapshot reaching each target test accuracy.
std::vector<std::optional<std::size_t>> steps_to_accuracy(std::span<const Snapshot> snapshots,
                                                          std::span<const double> targets);

/// Same, on the accuracy of test class group `group`.
std::vector<std::optional<std::size_t>> steps_to_group_accuracy(
    std::span<const Snapshot> snapshots, std::size_t group, std::span<const double> targets);

/// First snapshot reaching `target` test accuracy, if any.
const Snapshot* first_reaching(std::span<const Snapshot> snapshots, double target);

struct IncrementalConfig {
  std::vector<std::size_t> pretrain_classes;
  std::vector<std::size_t> new_classes;
  TrainConfig pretrain;
  TrainConfig continuation;
  bool freeze_hidden_on_continue = false;
  /// Start phase 2 with an empty mistake memory instead of extending the
  /// phase-1 record.
  bool reset_memory_on_continue = false;

  void validate(std::size_t n_classes) const;
};

struct IncrementalResult {
  TrainResult pretrain;
  /// Phase-2 snapshots carry group_accuracy = {old classes, new classes}.
  TrainResult continuation;
};

inline constexpr std::size_t kOldClassGroup = 0;
inline constexpr std::size_t kNewClassGroup = 1;

/// Phase 1: train on the pretrain classes only (train and test filtered).
TrainResult pretrain_incremental(Mlp mlp, const LabeledDataset& full_train,
                                 const LabeledDataset& test, const IncrementalConfig& config);

/// Phase 2: continue from `phase1` on the full dataset with the freeze mask
/// applied and the phase-1 mistake memory extended to the full id range.
/// Several phase-2 variants can share one phase-1 result. `phase2_subset`
/// (source ids indexing `full_train`) replaces the full set in phase 2.
TrainResult continue_incremental(const TrainResult& phase1, const LabeledDataset& full_train,
                                 const LabeledDataset& test, const IncrementalConfig& config,
                                 const LabeledDataset* phase2_subset = nullptr);

IncrementalResult incremental_train(Mlp mlp, const LabeledDataset& full_train,
                                    const LabeledDataset& test, const IncrementalConfig& config);

}  // namespace gatetrain
