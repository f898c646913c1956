#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gatetrain/datasets.hpp"
#include "gatetrain/netcore.hpp"

namespace gatetrain {

inline constexpr double kNotMeasured = std::numeric_limits<double>::quiet_NaN();

/// State of a run at one evaluation point.
struct Snapshot {
  std::size_t epoch = 0;  // epochs started, 1-based
  std::size_t forward_steps = 0;
  std::size_t update_steps = 0;
  double m1_energy = 0.0;
  std::size_t unique_mistakes = 0;
  double train_accuracy = kNotMeasured;
  double test_accuracy = kNotMeasured;
  std::vector<double> group_accuracy;  // one per configured test class group
};

/// Counters for one training run.
struct RunMetrics {
  std::size_t forward_steps = 0;
  std::size_t update_steps = 0;
  double m1_energy = 0.0;
  std::size_t epochs_completed = 0;
  /// Sum over update events of the number of plastic parameters written.
  std::uint64_t plastic_parameter_updates = 0;
  std::vector<Snapshot> snapshots;
  std::vector<std::size_t> per_sample_updates;

  RunMetrics() = default;
  explicit RunMetrics(std::size_t n_samples) : per_sample_updates(n_samples, 0) {}
};

/// One gate-approved parameter write. Throws InternalError on negative delta.
void record_update(RunMetrics& metrics, double delta_l1, std::size_t sample_id,
                   std::size_t plastic_parameters);

/// Parameter writes in units of (network size x dataset size). For a fully
/// plastic network this is update_steps / dataset_size, i.e. epochs of backprop.
double normalized_updates(const RunMetrics& metrics, std::size_t total_params,
                          std::size_t dataset_size);

/// Norms of (final - initial), pooled over every weight and bias.
struct WeightNormReport {
  double l1 = 0.0;
  double l2 = 0.0;
};

WeightNormReport weight_norms(const Mlp& final_net, const Mlp& initial_net);

double accuracy(std::span<const std::size_t> predictions, const LabeledDataset& dataset);

/// Accuracy restricted to samples whose label is in `classes`; NaN if none.
double group_accuracy(std::span<const std::size_t> predictions, const LabeledDataset& dataset,
                      std::span<const std::size_t> classes);

}  // namespace gatetrain
