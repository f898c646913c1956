#include "gatetrain/reports.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gatetrain/csv.hpp"
#include "gatetrain/errors.hpp"
#include "gatetrain/kernels.hpp"
#include "gatetrain/svg.hpp"

namespace gatetrain::reports {

using experiments::RunOutcome;

namespace {

const char* kPolicyColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string policy_color(GatePolicy p) { return kPolicyColors[static_cast<int>(p) % 5]; }

std::string real_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

double last_measured(const std::vector<Snapshot>& snaps, double Snapshot::*field) {
  for (auto it = snaps.rbegin(); it != snaps.rend(); ++it) {
    if (!std::isnan((*it).*field)) return (*it).*field;
  }
  return kNotMeasured;
}

double last_group(const std::vector<Snapshot>& snaps, std::size_t group) {
  return snaps.empty() || group >= snaps.back().group_accuracy.size()
             ? kNotMeasured
             : snaps.back().group_accuracy[group];
}

std::vector<const RunOutcome*> pointers(const std::vector<RunOutcome>& runs) {
  std::vector<const RunOutcome*> out;
  for (const auto& r : runs) out.push_back(&r);
  return out;
}

std::string target_col(const char* prefix, double t) { return prefix + real_tag(t); }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNotMeasured;
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

}  // namespace

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(sizes[i]);
  }
  return out;
}

Echo data_echo(const experiments::DataOptions& data) {
  return {{"dataset", data.dataset},
          {"subset", std::to_string(data.subset)},
          {"blur_sigma", format_real(data.blur_sigma)},
          {"augment", std::to_string(data.augment)}};
}

void write_runs(const std::filesystem::path& path, const std::vector<const RunOutcome*>& runs,
                const Echo& echo) {
  std::vector<std::string> header{"run_id"};
  for (const auto& [k, v] : echo) header.push_back(k);
  for (const char* col :
       {"seed", "hidden", "policy", "lr", "max_epochs", "eval_every", "criterion", "train_size",
        "parameters", "stop_reason", "epochs_completed", "forward_steps", "update_steps",
        "m1_energy", "unique_mistakes", "normalized_updates", "final_train_accuracy",
        "final_test_accuracy", "weight_delta_l1", "weight_delta_l2"}) {
    header.emplace_back(col);
  }
  CsvWriter w(path, header);
  for (const auto* r : runs) {
    const auto& cfg = r->spec.config;
    const auto& m = r->result.metrics;
    auto row = w.row();
    row << r->spec.run_id;
    for (const auto& [k, v] : echo) row << v;
    row << std::to_string(r->spec.seed) << join_sizes(r->spec.hidden)
        << std::string(to_string(cfg.policy)) << cfg.lr << cfg.max_epochs
        << (cfg.eval_every ? cfg.eval_every : r->train_size)
        << format_optional(cfg.criterion_test_accuracy) << r->train_size
        << r->initial.parameter_count() << std::string(to_string(r->result.stop))
        << m.epochs_completed << m.forward_steps << m.update_steps << m.m1_energy
        << unique_mistake_count(r->result.memory) << r->normalized_updates
        << last_measured(m.snapshots, &Snapshot::train_accuracy)
        << last_measured(m.snapshots, &Snapshot::test_accuracy) << r->norms.l1 << r->norms.l2;
  }
}

void write_snapshots(const std::filesystem::path& path,
                     const std::vector<const RunOutcome*>& runs) {
  CsvWriter w(path, {"run_id", "epoch", "forward_steps", "update_steps", "m1_energy",
                     "unique_mistakes", "train_accuracy", "test_accuracy"});
  for (const auto* r : runs) {
    for (const auto& s : r->result.metrics.snapshots) {
      w.row() << r->spec.run_id << s.epoch << s.forward_steps << s.update_steps << s.m1_energy
              << s.unique_mistakes << s.train_accuracy << s.test_accuracy;
    }
  }
}

void write_samples(const std::filesystem::path& path, const RunOutcome& run) {
  CsvWriter w(path, {"id", "ever_mistaken", "update_count"});
  const auto& counts = run.result.metrics.per_sample_updates;
  for (std::size_t id = 0; id < counts.size(); ++id) {
    w.row() << id << static_cast<int>(run.result.memory.flagged(id)) << counts[id];
  }
}

void write_train(const std::filesystem::path& dir, const RunOutcome& run,
                 const experiments::DataOptions& data) {
  write_runs(dir / "runs.csv", {&run}, data_echo(data));
  write_snapshots(dir / "snapshots.csv", {&run});
  write_samples(dir / "samples.csv", run);
}

// --- lr sweep --------------------------------------------------------------

void write_sweep(const std::filesystem::path& dir, const experiments::SweepResult& result,
                 const experiments::DataOptions& data) {
  const auto runs = pointers(result.runs);
  write_runs(dir / "runs.csv", runs, data_echo(data));
  write_snapshots(dir / "snapshots.csv", runs);

  const auto& targets = result.options.targets;
  std::vector<std::string> header{"lr", "policy", "seed"};
  for (double t : targets) header.push_back(target_col("updates_to_", t));
  for (double t : targets) header.push_back(target_col("m1_energy_to_", t));
  for (const char* c : {"stop_reason", "forward_steps", "update_steps", "m1_energy",
                        "unique_mistakes", "normalized_updates", "weight_delta_l1",
                        "weight_delta_l2"}) {
    header.emplace_back(c);
  }
  CsvWriter w(dir / "sweep.csv", header);
  for (const auto& r : result.runs) {
    const auto& m = r.result.metrics;
    auto row = w.row();
    row << real_tag(r.spec.config.lr) << std::string(to_string(r.spec.config.policy))
        << std::to_string(r.spec.seed);
    for (const auto& steps : steps_to_accuracy(m.snapshots, targets)) row << format_optional(steps);
    for (double t : targets) {
      const Snapshot* s = first_reaching(m.snapshots, t);
      row << format_optional(s ? std::optional(s->m1_energy) : std::nullopt);
    }
    row << std::string(to_string(r.result.stop)) << m.forward_steps << m.update_steps
        << m.m1_energy << unique_mistake_count(r.result.memory) << r.normalized_updates
        << r.norms.l1 << r.norms.l2;
  }

  // One panel per target: mean update steps (over seeds that got there) vs lr.
  const double panel_w = 420, panel_h = 300;
  svg::Document doc(panel_w * double(targets.size()), panel_h);
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    std::vector<svg::Series> series;
    for (auto policy : result.options.policies) {
      svg::Series s;
      s.label = std::string(to_string(policy));
      s.color = policy_color(policy);
      for (double lr : result.options.lrs) {
        std::vector<double> hits;
        for (const auto& r : result.runs) {
          if (r.spec.config.lr != lr || r.spec.config.policy != policy) continue;
          const double t[] = {targets[ti]};
          if (auto steps = steps_to_accuracy(r.result.metrics.snapshots, t)[0]) {
            hits.push_back(double(*steps));
          }
        }
        if (!hits.empty()) s.points.emplace_back(lr, mean_of(hits));
      }
      series.push_back(std::move(s));
    }
    svg::line_chart(doc, {panel_w * double(ti), 0, panel_w, panel_h},
                    svg::fit_axis(series, true, true), svg::fit_axis(series, false, true), series,
                    "updates to " + real_tag(100 * targets[ti]) + "% test accuracy",
                    "learning rate", "updates");
  }
  doc.save(dir / "sweep.svg");
}

// --- scaling ---------------------------------------------------------------

void write_scaling(const std::filesystem::path& dir, const experiments::ScalingResult& result,
                   const experiments::DataOptions& data) {
  std::vector<const RunOutcome*> runs;
  for (const auto& row : result.rows) runs.push_back(&row.run);
  write_runs(dir / "runs.csv", runs, data_echo(data));
  write_snapshots(dir / "snapshots.csv", runs);

  {
    CsvWriter w(dir / "scaling.csv", {"size", "policy", "seed", "stop_reason", "unique_mistakes",
                                      "unique_fraction", "update_steps", "forward_steps",
                                      "m1_energy", "final_test_accuracy"});
    for (const auto& row : result.rows) {
      const auto& r = row.run;
      const auto unique = unique_mistake_count(r.result.memory);
      w.row() << row.size << std::string(to_string(r.spec.config.policy))
              << std::to_string(r.spec.seed) << std::string(to_string(r.result.stop)) << unique
              << double(unique) / double(row.size) << r.result.metrics.update_steps
              << r.result.metrics.forward_steps << r.result.metrics.m1_energy
              << last_measured(r.result.metrics.snapshots, &Snapshot::test_accuracy);
    }
  }
  {
    CsvWriter w(dir / "scaling_fit.csv",
                {"policy", "exponent", "exponent_stderr", "log_prefactor", "n_points"});
    for (const auto& [policy, fit] : result.fits) {
      if (fit) {
        w.row() << std::string(to_string(policy)) << fit->exponent << fit->exponent_stderr
                << fit->log_prefactor << fit->n_points;
      } else {
        w.row() << std::string(to_string(policy)) << "unfitted" << "" << "" << std::size_t{0};
      }
    }
  }

  std::vector<svg::Series> series;
  for (const auto& [policy, fit] : result.fits) {
    svg::Series pts;
    pts.label = std::string(to_string(policy));
    pts.color = policy_color(policy);
    std::map<std::size_t, std::vector<double>> by_size;
    for (const auto& row : result.rows) {
      if (row.run.spec.config.policy == policy) {
        by_size[row.size].push_back(double(unique_mistake_count(row.run.result.memory)));
      }
    }
    for (const auto& [size, counts] : by_size) pts.points.emplace_back(double(size), mean_of(counts));
    series.push_back(pts);
    if (fit) {
      svg::Series line;
      line.label = pts.label + " fit, exponent " + real_tag(fit->exponent);
      line.color = pts.color;
      line.dashed = true;
      line.markers = false;
      for (const auto& p : pts.points) line.points.emplace_back(p.first, fit->predict(p.first));
      series.push_back(std::move(line));
    }
  }
  svg::Document doc(560, 380);
  svg::line_chart(doc, {0, 0, 560, 380}, svg::fit_axis(series, true, true),
                  svg::fit_axis(series, false, true), series, "unique mistakes vs dataset size",
                  "training set size", "unique mistakes");
  doc.save(dir / "scaling.svg");
}

// --- blur ------------------------------------------------------------------

void write_blur(const std::filesystem::path& dir, const experiments::BlurResult& result,
                const experiments::DataOptions& data) {
  std::vector<const RunOutcome*> runs;
  for (const auto& row : result.rows) runs.push_back(&row.run);
  write_runs(dir / "runs.csv", runs, data_echo(data));
  write_snapshots(dir / "snapshots.csv", runs);

  {
    CsvWriter w(dir / "blur.csv", {"sigma", "policy", "seed", "stop_reason", "epochs_to_criterion",
                                   "updates_to_criterion", "forward_steps", "update_steps",
                                   "m1_energy", "unique_mistakes", "weight_delta_l1",
                                   "weight_delta_l2"});
    const double t[] = {result.options.criterion};
    for (const auto& row : result.rows) {
      const auto& r = row.run;
      w.row() << row.sigma << std::string(to_string(r.spec.config.policy))
              << std::to_string(r.spec.seed) << std::string(to_string(r.result.stop))
              << format_optional(row.epochs_to_criterion)
              << format_optional(steps_to_accuracy(r.result.metrics.snapshots, t)[0])
              << r.result.metrics.forward_steps << r.result.metrics.update_steps
              << r.result.metrics.m1_energy << unique_mistake_count(r.result.memory) << r.norms.l1
              << r.norms.l2;
    }
  }
  CsvWriter w(dir / "blur_ratios.csv", {"sigma", "seed", "update_ratio"});
  for (double sigma : result.options.sigmas) {
    for (auto seed : result.options.seeds) {
      w.row() << sigma << std::to_string(seed)
              << format_optional(experiments::blur_update_ratio(result, sigma, seed));
    }
  }
}

// --- incremental -----------------------------------------------------------

void write_incremental(const std::filesystem::path& dir,
                       const experiments::IncrementalExperiment& exp,
                       const experiments::DataOptions& data) {
  const auto& o = exp.options;
  {
    CsvWriter w(dir / "incremental_pretrain.csv",
                {"seed", "augment", "stop_reason", "forward_steps", "update_steps", "m1_energy",
                 "unique_mistakes", "old_class_test_accuracy"});
    for (const auto& p : exp.pretrains) {
      const auto& m = p.result.metrics;
      w.row() << std::to_string(p.seed) << p.augment << std::string(to_string(p.result.stop))
              << m.forward_steps << m.update_steps << m.m1_energy
              << unique_mistake_count(p.result.memory)
              << last_measured(m.snapshots, &Snapshot::test_accuracy);
    }
  }
  {
    std::vector<std::string> header{"run_id", "dataset", "seed", "augment", "freeze", "policy",
                                    "lr", "epochs", "train_size", "forward_steps",
                                    "update_steps", "m1_energy", "unique_mistakes",
                                    "final_old_accuracy", "final_new_accuracy"};
    for (double t : o.targets) header.push_back(target_col("updates_to_new_", t));
    CsvWriter w(dir / "incremental_runs.csv", header);
    for (const auto& r : exp.runs) {
      const auto& m = r.result.metrics;
      auto row = w.row();
      row << r.run_id << data.dataset << std::to_string(r.seed) << r.augment
          << std::string(experiments::to_string(r.freeze)) << std::string(to_string(r.policy))
          << o.lr << o.epochs << r.train_size << m.forward_steps << m.update_steps << m.m1_energy
          << unique_mistake_count(r.result.memory) << last_group(m.snapshots, kOldClassGroup)
          << last_group(m.snapshots, kNewClassGroup);
      for (const auto& s : steps_to_group_accuracy(m.snapshots, kNewClassGroup, o.targets)) {
        row << format_optional(s);
      }
    }
  }
  {
    CsvWriter w(dir / "incremental_snapshots.csv",
                {"run_id", "forward_steps", "update_steps", "m1_energy", "unique_mistakes",
                 "test_accuracy", "old_accuracy", "new_accuracy"});
    for (const auto& r : exp.runs) {
      for (const auto& s : r.result.metrics.snapshots) {
        w.row() << r.run_id << s.forward_steps << s.update_steps << s.m1_energy
                << s.unique_mistakes << s.test_accuracy << s.group_accuracy.at(kOldClassGroup)
                << s.group_accuracy.at(kNewClassGroup);
      }
    }
  }
  {
    CsvWriter w(dir / "incremental_ratios.csv",
                {"seed", "augment", "freeze", "target", "update_ratio"});
    for (const auto& p : exp.pretrains) {
      for (auto f : o.freeze) {
        for (double t : o.targets) {
          w.row() << std::to_string(p.seed) << p.augment << std::string(experiments::to_string(f))
                  << t
                  << format_optional(
                         experiments::incremental_update_ratio(exp, p.seed, p.augment, f, t));
        }
      }
    }
  }
  if (!exp.scaling.empty()) {
    CsvWriter w(dir / "incremental_scaling.csv",
                {"seed", "augment", "size", "freeze", "stop_reason", "unique_mistakes",
                 "update_steps", "forward_steps"});
    for (const auto& r : exp.scaling) {
      w.row() << std::to_string(r.seed) << r.augment << r.size
              << std::string(experiments::to_string(r.freeze))
              << std::string(to_string(r.result.stop)) << unique_mistake_count(r.result.memory)
              << r.result.metrics.update_steps << r.result.metrics.forward_steps;
    }
    CsvWriter f(dir / "incremental_scaling_fit.csv",
                {"freeze", "exponent", "exponent_stderr", "log_prefactor", "n_points"});
    for (const auto& [freeze, fit] : exp.scaling_fits) {
      if (fit) {
        f.row() << std::string(experiments::to_string(freeze)) << fit->exponent
                << fit->exponent_stderr << fit->log_prefactor << fit->n_points;
      } else {
        f.row() << std::string(experiments::to_string(freeze)) << "unfitted" << "" << ""
                << std::size_t{0};
      }
    }
  }

  // Old- and new-class curves for the first seed and augmentation factor.
  if (exp.pretrains.empty()) return;
  const auto seed = exp.pretrains.front().seed;
  const auto aug = exp.pretrains.front().augment;
  std::vector<svg::Series> old_curves, new_curves;
  for (const auto& r : exp.runs) {
    if (r.seed != seed || r.augment != aug) continue;
    svg::Series s;
    s.label = std::string(experiments::to_string(r.freeze)) + " " + std::string(to_string(r.policy));
    s.color = policy_color(r.policy);
    s.dashed = r.freeze == experiments::FreezeSetting::AllPlastic;
    s.markers = false;
    svg::Series n = s;
    for (const auto& snap : r.result.metrics.snapshots) {
      s.points.emplace_back(double(snap.update_steps), snap.group_accuracy[kOldClassGroup]);
      n.points.emplace_back(double(snap.update_steps), snap.group_accuracy[kNewClassGroup]);
    }
    old_curves.push_back(std::move(s));
    new_curves.push_back(std::move(n));
  }
  svg::Document doc(1000, 380);
  const svg::Axis y{0.0, 1.0, false};
  svg::line_chart(doc, {0, 0, 500, 380}, svg::fit_axis(old_curves, true, false), y, old_curves,
                  "old classes", "update steps", "test accuracy");
  svg::line_chart(doc, {500, 0, 500, 380}, svg::fit_axis(new_curves, true, false), y, new_curves,
                  "new classes", "update steps", "test accuracy");
  doc.save(dir / "incremental.svg");
}

// --- 2-D -------------------------------------------------------------------

void write_viz2d(const std::filesystem::path& dir, const experiments::Viz2dResult& result) {
  const auto runs = pointers(result.runs);
  experiments::DataOptions d;
  d.dataset = "2d";
  d.n_2d = result.options.n;
  write_runs(dir / "runs.csv", runs, data_echo(d));
  write_snapshots(dir / "snapshots.csv", runs);

  const auto& ds = result.data;
  {
    CsvWriter w(dir / "viz2d_samples.csv",
                {"policy", "id", "x", "y", "label", "ever_mistaken", "update_count"});
    for (const auto& r : result.runs) {
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto id = ds.ids[i];
        w.row() << std::string(to_string(r.spec.config.policy)) << id << ds.sample(i)[0]
                << ds.sample(i)[1] << ds.labels[i]
                << static_cast<int>(r.result.memory.flagged(id))
                << r.result.metrics.per_sample_updates[id];
      }
    }
  }

  double lo_x = 0, hi_x = 0, lo_y = 0, hi_y = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    lo_x = std::min(lo_x, ds.sample(i)[0]);
    hi_x = std::max(hi_x, ds.sample(i)[0]);
    lo_y = std::min(lo_y, ds.sample(i)[1]);
    hi_y = std::max(hi_y, ds.sample(i)[1]);
  }
  const double pad = 0.3;
  const svg::Axis ax{lo_x - pad, hi_x + pad, false};
  const svg::Axis ay{lo_y - pad, hi_y + pad, false};
  const double panel = 340, margin = 20, top = 30;
  const int grid = 70;
  const char* region[] = {"#c6dbef", "#fdd0a2", "#c7e9c0", "#dadaeb"};
  const char* outline[] = {"#08519c", "#a63603", "#006d2c", "#54278f"};

  svg::Document doc(panel * double(result.runs.size()), panel + top + 10);
  for (std::size_t k = 0; k < result.runs.size(); ++k) {
    const auto& r = result.runs[k];
    const double x0 = panel * double(k) + margin, x1 = panel * double(k + 1) - margin;
    const double y0 = top, y1 = top + panel - 2 * margin;
    doc.text((x0 + x1) / 2, 20, std::string(to_string(r.spec.config.policy)), 14, "middle");

    // Decision regions on a grid of cell centres.
    LabeledDataset cells;
    cells.feature_dim = 2;
    cells.n_classes = ds.n_classes;
    for (int gy = 0; gy < grid; ++gy) {
      for (int gx = 0; gx < grid; ++gx) {
        const double cx = ax.lo + (ax.hi - ax.lo) * (gx + 0.5) / grid;
        const double cy = ay.lo + (ay.hi - ay.lo) * (gy + 0.5) / grid;
        const double pt[] = {cx, cy};
        cells.push_back(pt, 0, 0);
      }
    }
    const auto preds = kernels::predict_all(r.result.network, cells);
    const double cw = (x1 - x0) / grid, ch = (y1 - y0) / grid;
    for (int gy = 0; gy < grid; ++gy) {
      for (int gx = 0; gx < grid; ++gx) {
        const auto cls = preds[static_cast<std::size_t>(gy * grid + gx)] % 4;
        doc.rect(x0 + gx * cw, y1 - (gy + 1) * ch, cw + 0.05, ch + 0.05, region[cls]);
      }
    }

    std::size_t max_count = 1;
    for (auto c : r.result.metrics.per_sample_updates) max_count = std::max(max_count, c);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto count = r.result.metrics.per_sample_updates[ds.ids[i]];
      const double px = ax.map(ds.sample(i)[0], x0, x1);
      const double py = ay.map(ds.sample(i)[1], y1, y0);
      const auto cls = ds.labels[i] % 4;
      if (count == 0) {
        doc.circle(px, py, 3.0, "none", 0.0, outline[cls]);
      } else {
        doc.circle(px, py, 3.0, svg::heat_color(double(count) / double(max_count)), 1.0,
                   outline[cls]);
      }
    }
    doc.text((x0 + x1) / 2, y1 + 14,
             "max updates per sample " + std::to_string(max_count), 10, "middle");
  }
  doc.save(dir / "viz2d.svg");
}

// --- gradcheck -------------------------------------------------------------

void write_gradcheck(const std::filesystem::path& dir, const experiments::GradcheckReport& report) {
  CsvWriter w(dir / "gradcheck.csv",
              {"case", "layer_sizes", "parameters", "label", "max_relative_error", "passed"});
  for (std::size_t i = 0; i < report.cases.size(); ++i) {
    const auto& c = report.cases[i];
    w.row() << i << join_sizes(c.layer_sizes) << c.n_params << c.label << c.max_rel_error
            << static_cast<int>(c.passed);
  }
}

}  // namespace gatetrain::reports
