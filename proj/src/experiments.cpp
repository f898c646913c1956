#include "gatetrain/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <memory>

#include "gatetrain/errors.hpp"
#include "gatetrain/random.hpp"

namespace gatetrain::experiments {

namespace {

// Runs fn(0..count-1) on up to `jobs` threads. Kernels called from inside a
// task see a nested region and run single-threaded. The first exception (by
// task index) is rethrown after all tasks finish.
void parallel_tasks(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  const int threads = static_cast<int>(std::min<std::size_t>(count, static_cast<std::size_t>(jobs)));
  const long long n = static_cast<long long>(count);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::optional<PowerLawFit> try_fit(const std::vector<SizeCount>& points) {
  try {
    return fit_power_law(points);
  } catch (const FitError&) {
    return std::nullopt;
  }
}

std::string policy_tag(GatePolicy p) { return std::string(to_string(p)); }

}  // namespace

// --- data ------------------------------------------------------------------

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("GATETRAIN_DATA_DIR"); env && *env) return env;
  return "data";
}

std::size_t image_side(const LabeledDataset& dataset) {
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(double(dataset.feature_dim))));
  if (side * side != dataset.feature_dim || side < 2) {
    throw ShapeError("features of size " + std::to_string(dataset.feature_dim) +
                     " are not a square image");
  }
  return side;
}

DatasetPair prepare_data(const DataOptions& options) {
  DatasetPair pair;
  if (options.dataset == "2d") {
    pair.train = make_2d_task(options.n_2d, derive_seed(options.seed, "task"));
    pair.test = make_2d_task(options.n_2d, derive_seed(options.seed, "task-test"));
    if (options.subset || options.blur_sigma > 0.0 || options.augment > 1) {
      throw ConfigError("subset, blur and augment apply to image datasets only");
    }
    return pair;
  }
  pair = load_image_dataset(options.dataset, options.data_dir);
  if (options.subset && options.subset < pair.train.size()) {
    pair.train = subset(pair.train, options.subset, derive_seed(options.seed, "subset"));
  }
  if (options.blur_sigma > 0.0) {
    const std::size_t side = image_side(pair.train);
    pair.train = gaussian_blur(pair.train, options.blur_sigma, side, side);
    pair.test = gaussian_blur(pair.test, options.blur_sigma, side, side);
  }
  if (options.augment > 1) {
    const std::size_t side = image_side(pair.train);
    pair.train = augment(pair.train, options.augment, derive_seed(options.seed, "augment"), side,
                         side);
  }
  return pair;
}

// --- single runs -----------------------------------------------------------

std::vector<std::size_t> layer_sizes_for(const LabeledDataset& train,
                                         const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{train.feature_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(train.n_classes);
  return sizes;
}

RunOutcome run_one(const RunSpec& spec, const LabeledDataset& train, const LabeledDataset& test) {
  RunOutcome out;
  out.spec = spec;
  out.spec.config.shuffle_seed = derive_seed(spec.seed, "shuffle");
  out.initial = init_network(layer_sizes_for(train, spec.hidden), derive_seed(spec.seed, "init"));
  out.result = gatetrain::train(out.initial, train, test, out.spec.config);
  out.norms = weight_norms(out.result.network, out.initial);
  out.train_size = train.size();
  out.normalized_updates =
      normalized_updates(out.result.metrics, out.initial.parameter_count(), train.size());
  return out;
}

std::vector<RunOutcome> run_all(const std::vector<RunSpec>& specs, const LabeledDataset& train,
                                const LabeledDataset& test, int jobs) {
  std::vector<RunOutcome> out(specs.size());
  parallel_tasks(specs.size(), jobs,
                 [&](std::size_t i) { out[i] = run_one(specs[i], train, test); });
  return out;
}

std::optional<double> epochs_to_accuracy(const RunOutcome& run, double target) {
  const Snapshot* s = first_reaching(run.result.metrics.snapshots, target);
  if (!s || run.train_size == 0) return std::nullopt;
  return double(s->forward_steps) / double(run.train_size);
}

std::string format_lr(double lr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lr);
  return buf;
}

// --- lr sweep --------------------------------------------------------------

SweepResult sweep_lr(const SweepOptions& options, const LabeledDataset& train,
                     const LabeledDataset& test) {
  if (options.lrs.empty() || options.policies.empty() || options.seeds.empty()) {
    throw ConfigError("sweep grid is empty");
  }
  if (options.targets.empty()) throw ConfigError("sweep needs at least one target accuracy");
  const double stop_at = *std::max_element(options.targets.begin(), options.targets.end());

  std::vector<RunSpec> specs;
  for (double lr : options.lrs) {
    for (auto policy : options.policies) {
      for (auto seed : options.seeds) {
        RunSpec s;
        s.run_id = "lr" + format_lr(lr) + "-" + policy_tag(policy) + "-s" + std::to_string(seed);
        s.hidden = options.hidden;
        s.seed = seed;
        s.config.lr = lr;
        s.config.policy = policy;
        s.config.max_epochs = options.max_epochs;
        s.config.eval_every = options.eval_every;
        s.config.criterion_test_accuracy = stop_at;
        s.config.train_accuracy = options.train_accuracy;
        specs.push_back(std::move(s));
      }
    }
  }
  return {options, run_all(specs, train, test, options.jobs)};
}

// --- scaling ---------------------------------------------------------------

std::vector<std::size_t> default_scaling_sizes(const std::string& dataset, std::size_t n_train) {
  std::vector<std::size_t> sizes =
      dataset == "emnist-digits"
          ? std::vector<std::size_t>{5000, 10000, 20000, 40000, 60000, 120000, 180000, 240000}
          : std::vector<std::size_t>{4000, 8000, 16000, 32000, 60000};
  std::erase_if(sizes, [&](std::size_t s) { return s > n_train; });
  if (sizes.empty()) sizes.push_back(n_train);
  return sizes;
}

ScalingResult scaling(const ScalingOptions& options, const LabeledDataset& train,
                      const LabeledDataset& test) {
  if (options.sizes.empty()) throw ConfigError("scaling needs at least one size");
  for (auto s : options.sizes) {
    if (s == 0 || s > train.size()) {
      throw ConfigError("scaling size " + std::to_string(s) + " outside 1.." +
                        std::to_string(train.size()));
    }
  }
  struct Task {
    std::size_t size;
    RunSpec spec;
  };
  std::vector<Task> tasks;
  for (auto size : options.sizes) {
    for (auto policy : options.policies) {
      for (auto seed : options.seeds) {
        RunSpec s;
        s.run_id = "n" + std::to_string(size) + "-" + policy_tag(policy) + "-s" +
                   std::to_string(seed);
        s.hidden = options.hidden;
        s.seed = seed;
        s.config.lr = options.lr;
        s.config.policy = policy;
        s.config.max_epochs = options.max_epochs;
        s.config.eval_every = options.eval_every;
        s.config.criterion_test_accuracy = options.criterion;
        s.config.train_accuracy = TrainAccuracyCadence::Never;
        tasks.push_back({size, std::move(s)});
      }
    }
  }

  ScalingResult result;
  result.options = options;
  result.rows.resize(tasks.size());
  parallel_tasks(tasks.size(), options.jobs, [&](std::size_t i) {
    // Subsets of one seed are nested: a smaller size is a prefix of a larger one.
    const auto& t = tasks[i];
    const LabeledDataset part = subset(train, t.size, derive_seed(t.spec.seed, "subset"));
    result.rows[i] = {t.size, run_one(t.spec, part, test)};
  });

  for (auto policy : options.policies) {
    std::vector<SizeCount> points;
    for (const auto& row : result.rows) {
      if (row.run.spec.config.policy != policy) continue;
      points.push_back({double(row.size), double(unique_mistake_count(row.run.result.memory))});
    }
    result.fits.emplace_back(policy, try_fit(points));
  }
  return result;
}

// --- blur ------------------------------------------------------------------

BlurResult blur(const BlurOptions& options, const LabeledDataset& train,
                const LabeledDataset& test) {
  if (options.sigmas.empty()) throw ConfigError("blur needs at least one sigma");
  const std::size_t side = image_side(train);
  BlurResult result;
  result.options = options;
  for (double sigma : options.sigmas) {
    const LabeledDataset btrain = gaussian_blur(train, sigma, side, side);
    const LabeledDataset btest = gaussian_blur(test, sigma, side, side);
    std::vector<RunSpec> specs;
    for (auto policy : options.policies) {
      for (auto seed : options.seeds) {
        RunSpec s;
        s.run_id = "sigma" + format_lr(sigma) + "-" + policy_tag(policy) + "-s" +
                   std::to_string(seed);
        s.hidden = options.hidden;
        s.seed = seed;
        s.config.lr = options.lr;
        s.config.policy = policy;
        s.config.max_epochs = options.max_epochs;
        s.config.eval_every = options.eval_every;
        s.config.criterion_test_accuracy = options.criterion;
        s.config.train_accuracy = TrainAccuracyCadence::EpochEnd;
        specs.push_back(std::move(s));
      }
    }
    for (auto& run : run_all(specs, btrain, btest, options.jobs)) {
      BlurRow row;
      row.sigma = sigma;
      row.epochs_to_criterion = epochs_to_accuracy(run, options.criterion);
      row.run = std::move(run);
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

std::optional<double> blur_update_ratio(const BlurResult& result, double sigma,
                                        std::uint64_t seed) {
  const RunOutcome* gated = nullptr;
  const RunOutcome* base = nullptr;
  for (const auto& row : result.rows) {
    if (row.sigma != sigma || row.run.spec.seed != seed) continue;
    if (row.run.spec.config.policy == GatePolicy::MemorizedMistake) gated = &row.run;
    if (row.run.spec.config.policy == GatePolicy::Always) base = &row.run;
  }
  if (!gated || !base) return std::nullopt;
  return savings_ratio(gated->result.metrics, base->result.metrics, result.options.criterion);
}

// --- incremental -----------------------------------------------------------

std::string_view to_string(FreezeSetting setting) {
  return setting == FreezeSetting::HiddenFrozen ? "hidden-frozen" : "all-plastic";
}

FreezeSetting parse_freeze(std::string_view name) {
  if (name == "all-plastic" || name == "plastic") return FreezeSetting::AllPlastic;
  if (name == "hidden-frozen" || name == "frozen") return FreezeSetting::HiddenFrozen;
  throw ConfigError("unknown freeze setting '" + std::string(name) +
                    "' (expected all-plastic or hidden-frozen)");
}

namespace {

IncrementalConfig incremental_config(const IncrementalOptions& o, std::uint64_t seed,
                                     FreezeSetting freeze, GatePolicy policy) {
  IncrementalConfig c;
  c.pretrain_classes = o.old_classes;
  c.new_classes = o.new_classes;
  c.pretrain.lr = o.pretrain_lr;
  c.pretrain.max_epochs = o.pretrain_max_epochs;
  c.pretrain.criterion_test_accuracy = o.pretrain_criterion;
  c.pretrain.eval_every = o.eval_every;
  c.pretrain.policy = o.pretrain_policy;
  c.pretrain.shuffle_seed = derive_seed(seed, "shuffle");
  c.pretrain.train_accuracy = TrainAccuracyCadence::Never;
  c.continuation.lr = o.lr;
  c.continuation.max_epochs = o.epochs;
  c.continuation.eval_every = o.eval_every;
  c.continuation.policy = policy;
  c.continuation.shuffle_seed = derive_seed(seed, "shuffle-continue");
  c.continuation.train_accuracy = TrainAccuracyCadence::Never;
  c.continuation.snapshot_at_start = true;
  c.freeze_hidden_on_continue = freeze == FreezeSetting::HiddenFrozen;
  c.reset_memory_on_continue = o.reset_memory;
  return c;
}

}  // namespace

IncrementalExperiment incremental(const IncrementalOptions& options,
                                  const LabeledDataset& train, const LabeledDataset& test) {
  if (options.freeze.empty() || options.policies.empty() || options.seeds.empty() ||
      options.augment_factors.empty()) {
    throw ConfigError("incremental grid is empty");
  }
  IncrementalExperiment exp;
  exp.options = options;
  const std::size_t side = options.augment_factors == std::vector<std::size_t>{1}
                               ? 0
                               : image_side(train);

  for (auto factor : options.augment_factors) {
    if (factor == 0) throw ConfigError("augment factor must be >= 1");
    for (auto seed : options.seeds) {
      std::unique_ptr<LabeledDataset> owned;
      const LabeledDataset* data = &train;
      if (factor > 1) {
        owned = std::make_unique<LabeledDataset>(
            augment(train, factor, derive_seed(seed, "augment"), side, side));
        data = owned.get();
      }

      const auto base_cfg = incremental_config(options, seed, FreezeSetting::AllPlastic,
                                               GatePolicy::Always);
      base_cfg.validate(train.n_classes);
      Mlp net = init_network(layer_sizes_for(*data, options.hidden), derive_seed(seed, "init"));
      IncrementalPretrain pre{seed, factor, pretrain_incremental(net, *data, test, base_cfg)};

      struct Cell {
        FreezeSetting freeze;
        GatePolicy policy;
      };
      std::vector<Cell> cells;
      for (auto f : options.freeze) {
        for (auto p : options.policies) cells.push_back({f, p});
      }
      std::vector<IncrementalRun> runs(cells.size());
      parallel_tasks(cells.size(), options.jobs, [&](std::size_t i) {
        const auto cfg = incremental_config(options, seed, cells[i].freeze, cells[i].policy);
        IncrementalRun& r = runs[i];
        r.run_id = "aug" + std::to_string(factor) + "-" + std::string(to_string(cells[i].freeze)) +
                   "-" + policy_tag(cells[i].policy) + "-s" + std::to_string(seed);
        r.seed = seed;
        r.augment = factor;
        r.freeze = cells[i].freeze;
        r.policy = cells[i].policy;
        r.result = continue_incremental(pre.result, *data, test, cfg);
        r.train_size = data->size();
      });
      for (auto& r : runs) exp.runs.push_back(std::move(r));

      if (!options.scaling_sizes.empty()) {
        struct ScaleCell {
          std::size_t size;
          FreezeSetting freeze;
        };
        std::vector<ScaleCell> scells;
        for (auto size : options.scaling_sizes) {
          if (size == 0 || size > data->size()) {
            throw ConfigError("incremental scaling size " + std::to_string(size) +
                              " outside 1.." + std::to_string(data->size()));
          }
          for (auto f : options.freeze) scells.push_back({size, f});
        }
        std::vector<IncrementalScalingRow> rows(scells.size());
        parallel_tasks(scells.size(), options.jobs, [&](std::size_t i) {
          auto cfg = incremental_config(options, seed, scells[i].freeze,
                                        GatePolicy::MemorizedMistake);
          cfg.continuation.criterion_test_accuracy = options.scaling_target;
          cfg.continuation.criterion_group = kNewClassGroup;
          const LabeledDataset part =
              subset(*data, scells[i].size, derive_seed(seed, "subset"));
          rows[i] = {seed, factor, scells[i].size, scells[i].freeze,
                     GatePolicy::MemorizedMistake,
                     continue_incremental(pre.result, *data, test, cfg, &part)};
        });
        for (auto& r : rows) exp.scaling.push_back(std::move(r));
      }
      exp.pretrains.push_back(std::move(pre));
    }
  }

  if (!options.scaling_sizes.empty()) {
    for (auto f : options.freeze) {
      std::vector<SizeCount> points;
      for (const auto& r : exp.scaling) {
        if (r.freeze == f) {
          points.push_back({double(r.size), double(unique_mistake_count(r.result.memory))});
        }
      }
      exp.scaling_fits.emplace_back(f, try_fit(points));
    }
  }
  return exp;
}

const IncrementalRun* find_run(const IncrementalExperiment& exp, std::uint64_t seed,
                               std::size_t augment, FreezeSetting freeze, GatePolicy policy) {
  for (const auto& r : exp.runs) {
    if (r.seed == seed && r.augment == augment && r.freeze == freeze && r.policy == policy) {
      return &r;
    }
  }
  return nullptr;
}

std::optional<double> incremental_update_ratio(const IncrementalExperiment& exp,
                                               std::uint64_t seed, std::size_t augment,
                                               FreezeSetting freeze, double target) {
  const auto* gated = find_run(exp, seed, augment, freeze, GatePolicy::MemorizedMistake);
  const auto* base = find_run(exp, seed, augment, freeze, GatePolicy::Always);
  if (!gated || !base) return std::nullopt;
  const double t[] = {target};
  const auto g = steps_to_group_accuracy(gated->result.metrics.snapshots, kNewClassGroup, t)[0];
  const auto b = steps_to_group_accuracy(base->result.metrics.snapshots, kNewClassGroup, t)[0];
  if (!g || !b || *b == 0) return std::nullopt;
  return double(*g) / double(*b);
}

// --- 2-D -------------------------------------------------------------------

Viz2dResult viz2d(const Viz2dOptions& options) {
  if (options.policies.empty()) throw ConfigError("viz2d needs at least one policy");
  DataOptions d;
  d.dataset = "2d";
  d.n_2d = options.n;
  d.seed = options.seed;
  const auto data = prepare_data(d);

  std::vector<RunSpec> specs;
  for (auto policy : options.policies) {
    RunSpec s;
    s.run_id = policy_tag(policy);
    s.hidden = options.hidden;
    s.seed = options.seed;
    s.config.lr = options.lr;
    s.config.policy = policy;
    s.config.max_epochs = options.epochs;
    s.config.train_accuracy = TrainAccuracyCadence::EverySnapshot;
    specs.push_back(std::move(s));
  }
  Viz2dResult result;
  result.options = options;
  result.runs = run_all(specs, data.train, data.test, options.jobs);
  result.data = data.train;
  return result;
}

// --- gradient check --------------------------------------------------------

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-6});
  return std::fabs(analytic - numeric) / scale;
}

bool GradcheckReport::all_passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const auto& c) { return c.passed; });
}

GradcheckReport gradcheck(const GradcheckOptions& options) {
  if (!(options.step > 0.0) || !(options.tolerance > 0.0)) {
    throw ConfigError("gradcheck step and tolerance must be > 0");
  }
  GradcheckReport report;
  report.options = options;
  Rng rng = make_rng(options.seed, "gradcheck");

  for (std::size_t k = 0; k < options.networks; ++k) {
    std::vector<std::size_t> sizes;
    std::size_t params = 0;
    do {
      sizes.clear();
      const std::size_t n_layers = 2 + uniform_index(rng, 3);  // 1..3 weight layers
      for (std::size_t l = 0; l < n_layers; ++l) sizes.push_back(1 + uniform_index(rng, 5));
      sizes.back() = std::max<std::size_t>(sizes.back(), 2);
      params = 0;
      for (std::size_t l = 1; l < sizes.size(); ++l) params += sizes[l] * (sizes[l - 1] + 1);
    } while (params > options.max_params);

    Mlp mlp = init_network(sizes, derive_seed(options.seed, "net" + std::to_string(k)));
    for (auto& layer : mlp.layers) {
      for (auto& b : layer.biases) b = uniform(rng, -0.5, 0.5);
    }
    std::vector<double> x(sizes.front());
    for (auto& v : x) v = standard_normal(rng);
    const std::size_t label = uniform_index(rng, sizes.back());

    const GradientSet g = backward(mlp, forward(mlp, x), label);
    GradcheckCase c;
    c.layer_sizes = sizes;
    c.n_params = params;
    c.label = label;
    auto probe = [&](double& p, double analytic) {
      const double saved = p;
      p = saved + options.step;
      const double up = cross_entropy(mlp, x, label);
      p = saved - options.step;
      const double down = cross_entropy(mlp, x, label);
      p = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      c.max_rel_error = std::max(c.max_rel_error, relative_error(analytic, numeric));
    };
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
      auto& layer = mlp.layers[l];
      for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
        probe(layer.weights.data[i], g.weights[l].data[i]);
      }
      for (std::size_t i = 0; i < layer.biases.size(); ++i) {
        probe(layer.biases[i], g.biases[l][i]);
      }
    }
    c.passed = c.max_rel_error < options.tolerance;
    report.cases.push_back(std::move(c));
  }
  return report;
}

}  // namespace gatetrain::experiments
