#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gatetrain/analysis.hpp"
#include "gatetrain/datasets.hpp"
#include "gatetrain/gating.hpp"
#include "gatetrain/metrics.hpp"
#include "gatetrain/netcore.hpp"
#include "gatetrain/trainer.hpp"

// Experiment drivers behind the CLI subcommands. Every random choice derives
// from one run seed through named sub-streams ("init", "shuffle", "subset",
// "task", "augment") so that each can be varied on its own.
namespace gatetrain::experiments {

// --- data ------------------------------------------------------------------

struct DataOptions {
  std::string dataset = "mnist";  // mnist | emnist-digits | 2d
  std::filesystem::path data_dir;
  std::size_t subset = 0;         // 0: full training set
  double blur_sigma = 0.0;
  std::size_t augment = 1;
  std::size_t n_2d = 500;         // sample count for the 2d task
  std::uint64_t seed = 1;
};

/// Loads and transforms (subset, blur, augment) the train/test pair.
DatasetPair prepare_data(const DataOptions& options);

/// Side length of square image features (28 for MNIST); ShapeError otherwise.
std::size_t image_side(const LabeledDataset& dataset);

/// Directory from GATETRAIN_DATA_DIR, or "data" when unset.
std::filesystem::path default_data_dir();

// --- single runs -----------------------------------------------------------

struct RunSpec {
  std::string run_id;
  std::vector<std::size_t> hidden = {200};
  std::uint64_t seed = 1;
  TrainConfig config;  // shuffle_seed is derived from `seed`
};

struct RunOutcome {
  RunSpec spec;
  Mlp initial;
  TrainResult result;
  WeightNormReport norms;
  std::size_t train_size = 0;
  double normalized_updates = 0.0;
};

std::vector<std::size_t> layer_sizes_for(const LabeledDataset& train,
                                         const std::vector<std::size_t>& hidden);

RunOutcome run_one(const RunSpec& spec, const LabeledDataset& train, const LabeledDataset& test);

/// Runs independent specs on up to `jobs` threads; outcome i belongs to spec i.
std::vector<RunOutcome> run_all(const std::vector<RunSpec>& specs, const LabeledDataset& train,
                                const LabeledDataset& test, int jobs);

/// Epochs (forward steps / training-set size) at the first snapshot reaching
/// `target` test accuracy.
std::optional<double> epochs_to_accuracy(const RunOutcome& run, double target);

std::string format_lr(double lr);

// --- lr sweep --------------------------------------------------------------

struct SweepOptions {
  std::vector<double> lrs = {0.001, 0.003, 0.01, 0.03, 0.1, 0.3};
  std::vector<GatePolicy> policies = {GatePolicy::Always, GatePolicy::PureMistake,
                                      GatePolicy::MemorizedMistake};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::vector<double> targets = {0.95, 0.96, 0.97};
  std::vector<std::size_t> hidden = {200};
  std::size_t max_epochs = 20;
  std::size_t eval_every = 1000;
  TrainAccuracyCadence train_accuracy = TrainAccuracyCadence::EpochEnd;
  int jobs = 1;
};

struct SweepResult {
  SweepOptions options;
  std::vector<RunOutcome> runs;  // lr-major, then policy, then seed
};

SweepResult sweep_lr(const SweepOptions& options, const LabeledDataset& train,
                     const LabeledDataset& test);

// --- dataset-size scaling --------------------------------------------------

struct ScalingOptions {
  std::vector<std::size_t> sizes;
  std::vector<GatePolicy> policies = {GatePolicy::MemorizedMistake, GatePolicy::Always};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  double criterion = 0.97;
  double lr = 0.01;
  std::vector<std::size_t> hidden = {200};
  std::size_t max_epochs = 20;
  std::size_t eval_every = 1000;
  int jobs = 1;
};

struct ScalingRow {
  std::size_t size = 0;
  RunOutcome run;
};

struct ScalingResult {
  ScalingOptions options;
  std::vector<ScalingRow> rows;
  /// Fit of unique mistakes vs size per policy (absent when not computable).
  std::vector<std::pair<GatePolicy, std::optional<PowerLawFit>>> fits;
};

/// Default sizes: 5k..240k for EMNIST-Digits, 4k..60k otherwise, capped at
/// the training-set size.
std::vector<std::size_t> default_scaling_sizes(const std::string& dataset, std::size_t n_train);

ScalingResult scaling(const ScalingOptions& options, const LabeledDataset& train,
                      const LabeledDataset& test);

// --- blur ------------------------------------------------------------------

struct BlurOptions {
  std::vector<double> sigmas = {0.0, 1.0, 2.0};
  std::vector<GatePolicy> policies = {GatePolicy::Always, GatePolicy::MemorizedMistake};
  std::vector<std::uint64_t> seeds = {1};
  double criterion = 0.97;
  double lr = 0.01;
  std::vector<std::size_t> hidden = {200};
  std::size_t max_epochs = 60;
  std::size_t eval_every = 1000;
  int jobs = 1;
};

struct BlurRow {
  double sigma = 0.0;
  RunOutcome run;
  std::optional<double> epochs_to_criterion;
};

struct BlurResult {
  BlurOptions options;
  std::vector<BlurRow> rows;  // sigma-major, then policy, then seed
};

BlurResult blur(const BlurOptions& options, const LabeledDataset& train,
                const LabeledDataset& test);

/// Memorized / Always update steps at the criterion for one (sigma, seed);
/// absent if either run did not reach it.
std::optional<double> blur_update_ratio(const BlurResult& result, double sigma,
                                        std::uint64_t seed);

// --- incremental -----------------------------------------------------------

enum class FreezeSetting { AllPlastic, HiddenFrozen };
std::string_view to_string(FreezeSetting setting);
FreezeSetting parse_freeze(std::string_view name);

struct IncrementalOptions {
  std::vector<std::size_t> old_classes = {0, 1, 2, 3, 4, 5, 6};
  std::vector<std::size_t> new_classes = {7, 8, 9};
  double pretrain_lr = 0.01;
  double pretrain_criterion = 0.95;
  std::size_t pretrain_max_epochs = 20;
  GatePolicy pretrain_policy = GatePolicy::Always;
  double lr = 0.001;
  std::size_t epochs = 3;
  std::size_t eval_every = 2000;
  std::vector<FreezeSetting> freeze = {FreezeSetting::AllPlastic, FreezeSetting::HiddenFrozen};
  std::vector<GatePolicy> policies = {GatePolicy::Always, GatePolicy::MemorizedMistake};
  std::vector<std::size_t> augment_factors = {1};
  std::vector<std::uint64_t> seeds = {1};
  std::vector<double> targets = {0.8, 0.85, 0.9};
  std::vector<std::size_t> hidden = {200};
  bool reset_memory = false;
  /// Phase-2 dataset sizes for the unique-sample scaling; empty skips it.
  std::vector<std::size_t> scaling_sizes;
  double scaling_target = 0.85;
  int jobs = 1;
};

struct IncrementalRun {
  std::string run_id;
  std::uint64_t seed = 1;
  std::size_t augment = 1;
  FreezeSetting freeze = FreezeSetting::AllPlastic;
  GatePolicy policy = GatePolicy::Always;
  TrainResult result;
  std::size_t train_size = 0;
};

struct IncrementalPretrain {
  std::uint64_t seed = 1;
  std::size_t augment = 1;
  TrainResult result;
};

struct IncrementalScalingRow {
  std::uint64_t seed = 1;
  std::size_t augment = 1;
  std::size_t size = 0;
  FreezeSetting freeze = FreezeSetting::HiddenFrozen;
  GatePolicy policy = GatePolicy::MemorizedMistake;
  TrainResult result;
};

struct IncrementalExperiment {
  IncrementalOptions options;
  std::vector<IncrementalPretrain> pretrains;
  std::vector<IncrementalRun> runs;
  std::vector<IncrementalScalingRow> scaling;
  std::vector<std::pair<FreezeSetting, std::optional<PowerLawFit>>> scaling_fits;
};

IncrementalExperiment incremental(const IncrementalOptions& options,
                                  const LabeledDataset& train, const LabeledDataset& test);

/// Update-step ratio memorized/always to reach `target` new-class accuracy
/// for one (seed, augment, freeze) cell; absent if either never got there.
std::optional<double> incremental_update_ratio(const IncrementalExperiment& exp,
                                               std::uint64_t seed, std::size_t augment,
                                               FreezeSetting freeze, double target);

const IncrementalRun* find_run(const IncrementalExperiment& exp, std::uint64_t seed,
                               std::size_t augment, FreezeSetting freeze, GatePolicy policy);

// --- 2-D visualization -----------------------------------------------------

struct Viz2dOptions {
  std::size_t n = 500;
  std::size_t epochs = 50;
  double lr = 0.05;
  std::vector<std::size_t> hidden = {32};
  std::uint64_t seed = 1;
  std::vector<GatePolicy> policies = {GatePolicy::Always, GatePolicy::PureMistake,
                                      GatePolicy::MemorizedMistake};
  int jobs = 1;
};

struct Viz2dResult {
  Viz2dOptions options;
  LabeledDataset data;
  std::vector<RunOutcome> runs;  // one per policy
};

Viz2dResult viz2d(const Viz2dOptions& options);

// --- gradient check --------------------------------------------------------

struct GradcheckOptions {
  std::uint64_t seed = 1;
  std::size_t networks = 20;
  std::size_t max_params = 60;
  double step = 1e-5;
  double tolerance = 1e-4;
};

struct GradcheckCase {
  std::vector<std::size_t> layer_sizes;
  std::size_t n_params = 0;
  std::size_t label = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  GradcheckOptions options;
  std::vector<GradcheckCase> cases;
  bool all_passed() const;
};

/// Central finite differences of cross_entropy against backward() on random
/// small networks.
GradcheckReport gradcheck(const GradcheckOptions& options);

/// |a - b| / max(|a|, |b|, 1e-6).
double relative_error(double analytic, double numeric);

}  // namespace gatetrain::experiments
