// gatetrain: command-line driver for the mistake-gated training experiments.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "gatetrain/errors.hpp"
#include "gatetrain/experiments.hpp"
#include "gatetrain/reports.hpp"

namespace fs = std::filesystem;
using namespace gatetrain;
namespace ex = gatetrain::experiments;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct Common {
  std::string dataset = "mnist";
  std::string data_dir = ex::default_data_dir().string();
  std::string out;
  std::size_t subset = 0;
  double blur_sigma = 0.0;
  std::size_t augment = 1;
  int jobs = 1;

  ex::DataOptions data(std::uint64_t seed) const {
    ex::DataOptions d;
    d.dataset = dataset;
    d.data_dir = data_dir;
    d.subset = subset;
    d.blur_sigma = blur_sigma;
    d.augment = augment;
    d.seed = seed;
    return d;
  }
};

void add_data_flags(CLI::App* cmd, Common& c, bool transforms) {
  cmd->add_option("--dataset", c.dataset, "mnist, emnist-digits or 2d")
      ->check(CLI::IsMember({"mnist", "emnist-digits", "2d"}))
      ->capture_default_str();
  cmd->add_option("--data-dir", c.data_dir, "Directory of IDX files (env GATETRAIN_DATA_DIR)")
      ->capture_default_str();
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--jobs", c.jobs, "Independent runs executed concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  if (transforms) {
    cmd->add_option("--subset", c.subset, "Random training subset size (0: all)");
    cmd->add_option("--blur", c.blur_sigma, "Gaussian blur sigma applied to train and test")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--augment", c.augment, "Augmentation factor for the training set")
        ->check(CLI::PositiveNumber);
  }
}

std::vector<GatePolicy> parse_policies(const std::vector<std::string>& names) {
  std::vector<GatePolicy> out;
  for (const auto& n : names) out.push_back(parse_policy(n));
  if (out.empty()) throw ConfigError("no policies given");
  return out;
}

TrainAccuracyCadence parse_cadence(const std::string& name, std::size_t eval_every) {
  if (name == "every") return TrainAccuracyCadence::EverySnapshot;
  if (name == "epoch") return TrainAccuracyCadence::EpochEnd;
  if (name == "never") return TrainAccuracyCadence::Never;
  if (name == "auto") {
    return eval_every == 0 ? TrainAccuracyCadence::EverySnapshot : TrainAccuracyCadence::EpochEnd;
  }
  throw ConfigError("unknown train-accuracy cadence '" + name + "'");
}

fs::path out_dir(const Common& c, const char* command) {
  fs::path dir = c.out.empty() ? fs::path("out") / command : fs::path(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mistake-gated online training experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gatetrain 0.1.0");

  // --- train ---
  Common train_c;
  std::string train_policy = "always";
  ex::RunSpec train_spec;
  train_spec.config.max_epochs = 20;
  double train_criterion = 0.0;
  std::string train_cadence = "auto";
  auto* train_cmd = app.add_subcommand("train", "Train one network and write run CSVs");
  add_data_flags(train_cmd, train_c, true);
  train_cmd->add_option("--policy", train_policy, "always | pure | memorized")->capture_default_str();
  train_cmd->add_option("--lr", train_spec.config.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--criterion", train_criterion, "Stop at this test accuracy (0: none)");
  train_cmd->add_option("--max-epochs", train_spec.config.max_epochs)->capture_default_str();
  train_cmd->add_option("--eval-every", train_spec.config.eval_every,
                        "Forward steps between snapshots (0: once per epoch)");
  train_cmd->add_option("--hidden", train_spec.hidden, "Hidden layer sizes")
      ->delimiter(',')
      ->capture_default_str();
  train_cmd->add_option("--seed", train_spec.seed)->capture_default_str();
  train_cmd->add_option("--train-accuracy", train_cadence, "auto | every | epoch | never")
      ->capture_default_str();

  // --- sweep-lr ---
  Common sweep_c;
  ex::SweepOptions sweep;
  std::vector<std::string> sweep_policies{"always", "pure", "memorized"};
  auto* sweep_cmd = app.add_subcommand("sweep-lr", "All policies over a learning-rate grid");
  add_data_flags(sweep_cmd, sweep_c, true);
  sweep_cmd->add_option("--lrs", sweep.lrs)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--policies", sweep_policies)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep.seeds)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--targets", sweep.targets)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--hidden", sweep.hidden)->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--max-epochs", sweep.max_epochs)->capture_default_str();
  sweep_cmd->add_option("--eval-every", sweep.eval_every)->capture_default_str();

  // --- scaling ---
  Common scale_c;
  ex::ScalingOptions scale;
  std::vector<std::string> scale_policies{"memorized", "always"};
  double scale_criterion = 0.0;
  auto* scale_cmd = app.add_subcommand("scaling", "Unique mistakes vs training-set size");
  add_data_flags(scale_cmd, scale_c, false);
  scale_cmd->add_option("--sizes", scale.sizes, "Subset sizes (default depends on dataset)")
      ->delimiter(',');
  scale_cmd->add_option("--policies", scale_policies)->delimiter(',')->capture_default_str();
  scale_cmd->add_option("--seeds", scale.seeds)->delimiter(',')->capture_default_str();
  scale_cmd->add_option("--criterion", scale_criterion,
                        "Test-accuracy criterion (default 0.98 EMNIST, 0.97 MNIST)");
  scale_cmd->add_option("--lr", scale.lr)->capture_default_str();
  scale_cmd->add_option("--hidden", scale.hidden)->delimiter(',')->capture_default_str();
  scale_cmd->add_option("--max-epochs", scale.max_epochs)->capture_default_str();
  scale_cmd->add_option("--eval-every", scale.eval_every)->capture_default_str();

  // --- blur ---
  Common blur_c;
  ex::BlurOptions blur_o;
  std::vector<std::string> blur_policies{"always", "memorized"};
  auto* blur_cmd = app.add_subcommand("blur", "Gated vs ungated training on blurred images");
  add_data_flags(blur_cmd, blur_c, false);
  blur_cmd->add_option("--sigmas", blur_o.sigmas)->delimiter(',')->capture_default_str();
  blur_cmd->add_option("--policies", blur_policies)->delimiter(',')->capture_default_str();
  blur_cmd->add_option("--seeds", blur_o.seeds)->delimiter(',')->capture_default_str();
  blur_cmd->add_option("--criterion", blur_o.criterion)->capture_default_str();
  blur_cmd->add_option("--lr", blur_o.lr)->capture_default_str();
  blur_cmd->add_option("--hidden", blur_o.hidden)->delimiter(',')->capture_default_str();
  blur_cmd->add_option("--max-epochs", blur_o.max_epochs)->capture_default_str();
  blur_cmd->add_option("--eval-every", blur_o.eval_every)->capture_default_str();

  // --- incremental ---
  Common inc_c;
  ex::IncrementalOptions inc;
  std::vector<std::string> inc_policies{"always", "memorized"};
  std::vector<std::string> inc_freeze{"all-plastic", "hidden-frozen"};
  std::string inc_pre_policy = "always";
  auto* inc_cmd = app.add_subcommand("incremental", "Pretrain on old classes, then add new ones");
  add_data_flags(inc_cmd, inc_c, false);
  inc_cmd->add_option("--old-classes", inc.old_classes)->delimiter(',')->capture_default_str();
  inc_cmd->add_option("--new-classes", inc.new_classes)->delimiter(',')->capture_default_str();
  inc_cmd->add_option("--pretrain-lr", inc.pretrain_lr)->capture_default_str();
  inc_cmd->add_option("--pretrain-criterion", inc.pretrain_criterion)->capture_default_str();
  inc_cmd->add_option("--pretrain-max-epochs", inc.pretrain_max_epochs)->capture_default_str();
  inc_cmd->add_option("--pretrain-policy", inc_pre_policy)->capture_default_str();
  inc_cmd->add_option("--lr", inc.lr)->capture_default_str();
  inc_cmd->add_option("--epochs", inc.epochs, "Phase-2 epoch budget")->capture_default_str();
  inc_cmd->add_option("--eval-every", inc.eval_every)->capture_default_str();
  inc_cmd->add_option("--freeze", inc_freeze, "all-plastic, hidden-frozen")
      ->delimiter(',')
      ->capture_default_str();
  inc_cmd->add_option("--policies", inc_policies)->delimiter(',')->capture_default_str();
  inc_cmd->add_option("--augment-factors", inc.augment_factors)
      ->delimiter(',')
      ->capture_default_str();
  inc_cmd->add_option("--seeds", inc.seeds)->delimiter(',')->capture_default_str();
  inc_cmd->add_option("--targets", inc.targets, "New-class accuracy targets")
      ->delimiter(',')
      ->capture_default_str();
  inc_cmd->add_option("--hidden", inc.hidden)->delimiter(',')->capture_default_str();
  inc_cmd->add_flag("--reset-memory", inc.reset_memory,
                    "Start phase 2 with an empty mistake memory");
  inc_cmd->add_option("--scaling-sizes", inc.scaling_sizes,
                      "Phase-2 subset sizes for unique-sample scaling")
      ->delimiter(',');
  inc_cmd->add_option("--scaling-target", inc.scaling_target)->capture_default_str();

  // --- viz2d ---
  std::string viz_out;
  ex::Viz2dOptions viz;
  std::vector<std::string> viz_policies{"always", "pure", "memorized"};
  auto* viz_cmd = app.add_subcommand("viz2d", "Two-class 2-D task with an SVG of update counts");
  viz_cmd->add_option("--out", viz_out, "Output directory");
  viz_cmd->add_option("--n", viz.n, "Sample count")->capture_default_str();
  viz_cmd->add_option("--epochs", viz.epochs)->capture_default_str();
  viz_cmd->add_option("--lr", viz.lr)->capture_default_str();
  viz_cmd->add_option("--hidden", viz.hidden)->delimiter(',')->capture_default_str();
  viz_cmd->add_option("--seed", viz.seed)->capture_default_str();
  viz_cmd->add_option("--policies", viz_policies)->delimiter(',')->capture_default_str();
  viz_cmd->add_option("--jobs", viz.jobs)->check(CLI::PositiveNumber)->capture_default_str();

  // --- gradcheck ---
  std::string grad_out;
  ex::GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of backprop");
  grad_cmd->add_option("--out", grad_out, "Output directory (omit to skip the CSV)");
  grad_cmd->add_option("--seed", grad.seed)->capture_default_str();
  grad_cmd->add_option("--networks", grad.networks)->capture_default_str();
  grad_cmd->add_option("--max-params", grad.max_params)->capture_default_str();
  grad_cmd->add_option("--step", grad.step)->capture_default_str();
  grad_cmd->add_option("--tolerance", grad.tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train_cmd) {
      auto& cfg = train_spec.config;
      cfg.policy = parse_policy(train_policy);
      if (train_criterion > 0.0) cfg.criterion_test_accuracy = train_criterion;
      cfg.train_accuracy = parse_cadence(train_cadence, cfg.eval_every);
      const auto data_opts = train_c.data(train_spec.seed);
      const auto dir = out_dir(train_c, "train");
      const auto data = ex::prepare_data(data_opts);
      train_spec.run_id = std::string(to_string(cfg.policy)) + "-s" + std::to_string(train_spec.seed);
      const auto run = ex::run_one(train_spec, data.train, data.test);
      reports::write_train(dir, run, data_opts);
      const auto& m = run.result.metrics;
      std::cout << run.spec.run_id << ": " << to_string(run.result.stop) << " after "
                << m.forward_steps << " forward / " << m.update_steps << " update steps, "
                << unique_mistake_count(run.result.memory) << " unique mistakes, test accuracy "
                << pct(m.snapshots.back().test_accuracy) << "\n";
    } else if (*sweep_cmd) {
      sweep.policies = parse_policies(sweep_policies);
      sweep.jobs = sweep_c.jobs;
      const auto data_opts = sweep_c.data(sweep.seeds.empty() ? 1 : sweep.seeds.front());
      const auto dir = out_dir(sweep_c, "sweep-lr");
      const auto data = ex::prepare_data(data_opts);
      const auto result = ex::sweep_lr(sweep, data.train, data.test);
      reports::write_sweep(dir, result, data_opts);
      std::cout << result.runs.size() << " runs written to " << dir.string() << "\n";
    } else if (*scale_cmd) {
      scale.policies = parse_policies(scale_policies);
      scale.jobs = scale_c.jobs;
      scale.criterion = scale_criterion > 0.0 ? scale_criterion
                        : scale_c.dataset == "emnist-digits" ? 0.98
                                                             : 0.97;
      const auto data_opts = scale_c.data(1);
      const auto dir = out_dir(scale_c, "scaling");
      const auto data = ex::prepare_data(data_opts);
      if (scale.sizes.empty()) {
        scale.sizes = ex::default_scaling_sizes(scale_c.dataset, data.train.size());
      }
      const auto result = ex::scaling(scale, data.train, data.test);
      reports::write_scaling(dir, result, data_opts);
      for (const auto& [policy, fit] : result.fits) {
        std::cout << to_string(policy) << ": ";
        if (fit) {
          std::cout << "unique mistakes ~ size^" << fit->exponent << " (stderr "
                    << fit->exponent_stderr << ")\n";
        } else {
          std::cout << "no fit\n";
        }
      }
    } else if (*blur_cmd) {
      blur_o.policies = parse_policies(blur_policies);
      blur_o.jobs = blur_c.jobs;
      const auto data_opts = blur_c.data(1);
      const auto dir = out_dir(blur_c, "blur");
      const auto data = ex::prepare_data(data_opts);
      const auto result = ex::blur(blur_o, data.train, data.test);
      reports::write_blur(dir, result, data_opts);
      for (double sigma : blur_o.sigmas) {
        for (auto seed : blur_o.seeds) {
          const auto r = ex::blur_update_ratio(result, sigma, seed);
          std::cout << "sigma " << sigma << " seed " << seed << ": update ratio "
                    << (r ? std::to_string(*r) : std::string("unreached")) << "\n";
        }
      }
    } else if (*inc_cmd) {
      inc.policies = parse_policies(inc_policies);
      inc.pretrain_policy = parse_policy(inc_pre_policy);
      inc.freeze.clear();
      for (const auto& f : inc_freeze) inc.freeze.push_back(ex::parse_freeze(f));
      inc.jobs = inc_c.jobs;
      const auto data_opts = inc_c.data(1);
      const auto dir = out_dir(inc_c, "incremental");
      const auto data = ex::prepare_data(data_opts);
      const auto exp = ex::incremental(inc, data.train, data.test);
      reports::write_incremental(dir, exp, data_opts);
      std::cout << exp.runs.size() << " phase-2 runs written to " << dir.string() << "\n";
    } else if (*viz_cmd) {
      viz.policies = parse_policies(viz_policies);
      Common c;
      c.out = viz_out;
      const auto dir = out_dir(c, "viz2d");
      const auto result = ex::viz2d(viz);
      reports::write_viz2d(dir, result);
      for (const auto& r : result.runs) {
        std::size_t unused = 0;
        for (auto n : r.result.metrics.per_sample_updates) unused += n == 0;
        std::cout << to_string(r.spec.config.policy) << ": " << r.result.metrics.update_steps
                  << " updates, " << unused << "/" << result.data.size()
                  << " samples never used\n";
      }
    } else if (*grad_cmd) {
      const auto report = ex::gradcheck(grad);
      if (!grad_out.empty()) {
        Common c;
        c.out = grad_out;
        reports::write_gradcheck(out_dir(c, "gradcheck"), report);
      }
      double worst = 0.0;
      for (const auto& c : report.cases) worst = std::max(worst, c.max_rel_error);
      const bool ok = report.all_passed();
      std::cout << "gradcheck " << (ok ? "passed" : "FAILED") << ": " << report.cases.size()
                << " networks, worst relative error " << worst << "\n";
      return ok ? kExitOk : kExitNumeric;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const gatetrain::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
