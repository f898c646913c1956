#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gatetrain/csv.hpp"
#include "gatetrain/errors.hpp"
#include "gatetrain/experiments.hpp"
#include "gatetrain/random.hpp"
#include "gatetrain/reports.hpp"
#include "gatetrain/svg.hpp"

using namespace gatetrain;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gatetrain_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GATETRAIN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("csv") {

TEST_CASE("number formatting") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(2.0) == "2");
  CHECK(format_real(std::nan("")) == "");
  CHECK(std::stod(format_real(1.0 / 3)) == 1.0 / 3);
  CHECK(format_optional(std::optional<std::size_t>{}) == "unreached");
  CHECK(format_optional(std::optional<std::size_t>{12}) == "12");
  CHECK(format_optional(std::optional<double>{0.5}) == "0.5");
}

TEST_CASE("writer quotes and checks width") {
  const auto dir = scratch("csv");
  {
    CsvWriter w(dir / "a.csv", {"x", "y"});
    w.row() << "plain" << "with,comma";
    w.row() << "say \"hi\"" << std::size_t{3};
    CHECK_THROWS_AS(w.row() << "only one", InternalError);
  }
  CHECK(slurp(dir / "a.csv") == "x,y\nplain,\"with,comma\"\n\"say \"\"hi\"\"\",3\n");
  CHECK_THROWS_AS(CsvWriter(dir / "missing" / "b.csv", {"x"}), IoError);
}

}  // TEST_SUITE

TEST_SUITE("svg") {

TEST_CASE("document structure") {
  svg::Document doc(100, 50);
  doc.circle(10, 10, 2, "red");
  doc.text(5, 5, "a<b & \"c\"");
  const auto s = doc.str();
  CHECK(s.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") != std::string::npos);
  CHECK(s.find("a&lt;b &amp; &quot;c&quot;") != std::string::npos);
  CHECK(s.rfind("</svg>\n") == s.size() - 7);
}

TEST_CASE("axes") {
  const svg::Axis lin{0, 10, false};
  CHECK(lin.map(5, 0, 100) == doctest::Approx(50));
  const svg::Axis lg{1, 100, true};
  CHECK(lg.map(10, 0, 100) == doctest::Approx(50));
  svg::Series s;
  s.points = {{1, 5}, {100, 50}};
  const auto ax = svg::fit_axis({s}, true, true);
  CHECK(ax.lo < 1);
  CHECK(ax.hi > 100);
  CHECK(svg::heat_color(0) != svg::heat_color(1));
}

}  // TEST_SUITE

TEST_SUITE("experiments") {

TEST_CASE("gradcheck passes on seed 1 and reports sizes") {
  const auto r = experiments::gradcheck({});
  CHECK(r.cases.size() == 20);
  CHECK(r.all_passed());
  for (const auto& c : r.cases) CHECK(c.n_params <= 60);
  CHECK(experiments::relative_error(1.0, 1.0) == 0.0);
  CHECK(experiments::relative_error(0.0, 1e-9) == doctest::Approx(1e-3));
}

TEST_CASE("viz2d: ungated counts equal epochs, pure gating leaves most samples unused") {
  const auto r = experiments::viz2d({});
  REQUIRE(r.runs.size() == 3);
  for (const auto& run : r.runs) {
    const auto& counts = run.result.metrics.per_sample_updates;
    std::size_t unused = 0;
    for (auto c : counts) unused += c == 0;
    switch (run.spec.config.policy) {
      case GatePolicy::Always:
        for (auto c : counts) CHECK(c == 50);
        break;
      case GatePolicy::PureMistake:
        CHECK(2 * unused > counts.size());
        break;
      case GatePolicy::MemorizedMistake:
        CHECK(unused > 0);
        break;
    }
  }
}

TEST_CASE("scaling and blur drivers on a small synthetic image set") {
  // 6x6 images of two noisy bars; enough to exercise the drivers end to end.
  LabeledDataset train, test;
  for (auto* ds : {&train, &test}) {
    ds->feature_dim = 36;
    ds->n_classes = 2;
  }
  Rng rng(3);
  for (std::size_t i = 0; i < 400; ++i) {
    std::vector<double> x(36, 0.0);
    const std::size_t label = i % 2;
    for (std::size_t k = 0; k < 6; ++k) x[label ? k * 6 + 2 : 12 + k] = 1.0;
    for (auto& v : x) v += 0.3 * uniform01(rng);
    (i < 300 ? train : test).push_back(x, label, 0);
  }

  experiments::ScalingOptions so;
  so.sizes = {50, 100, 200};
  so.seeds = {1, 2};
  so.criterion = 0.99;
  so.max_epochs = 3;
  so.eval_every = 25;
  so.hidden = {8};
  so.jobs = 2;
  const auto sr = experiments::scaling(so, train, test);
  CHECK(sr.rows.size() == 3 * 2 * 2);
  so.jobs = 1;
  const auto serial = experiments::scaling(so, train, test);
  for (std::size_t i = 0; i < sr.rows.size(); ++i) {
    CHECK(sr.rows[i].run.result.metrics.update_steps ==
          serial.rows[i].run.result.metrics.update_steps);
    CHECK(sr.rows[i].run.result.network.layers == serial.rows[i].run.result.network.layers);
  }

  experiments::BlurOptions bo;
  bo.sigmas = {0.0, 1.0};
  bo.criterion = 0.95;
  bo.max_epochs = 5;
  bo.eval_every = 20;
  bo.hidden = {8};
  const auto br = experiments::blur(bo, train, test);
  CHECK(br.rows.size() == 4);

  const auto dir = scratch("drivers");
  experiments::DataOptions d;
  d.dataset = "synthetic";
  reports::write_scaling(dir, sr, d);
  reports::write_blur(dir, br, d);
  for (const char* f : {"scaling.csv", "scaling_fit.csv", "scaling.svg", "blur.csv",
                        "blur_ratios.csv", "runs.csv", "snapshots.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK_THROWS_AS(experiments::scaling([&] {
                    auto o = so;
                    o.sizes = {301};
                    return o;
                  }(),
                                       train, test),
                  ConfigError);
}

TEST_CASE("run_all propagates exceptions") {
  const auto data = experiments::prepare_data([] {
    experiments::DataOptions d;
    d.dataset = "2d";
    d.n_2d = 40;
    return d;
  }());
  std::vector<experiments::RunSpec> specs(3);
  specs[1].config.lr = -1.0;
  for (auto& s : specs) s.hidden = {4};
  CHECK_THROWS_AS(experiments::run_all(specs, data.train, data.test, 2), ConfigError);
  CHECK_THROWS_AS(experiments::run_all(specs, data.train, data.test, 1), ConfigError);
}

TEST_CASE("viz2d output is byte-identical across runs") {
  const auto a = scratch("viz_a"), b = scratch("viz_b");
  reports::write_viz2d(a, experiments::viz2d({}));
  reports::write_viz2d(b, experiments::viz2d({}));
  for (const char* f : {"runs.csv", "snapshots.csv", "viz2d_samples.csv", "viz2d.svg"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(!slurp(a / f).empty());
  }
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("train --policy bogus --dataset 2d") == 2);
  CHECK(run_cli("train --no-such-flag") == 2);
  CHECK(run_cli("train --dataset mnist --data-dir /nonexistent/dir") == 3);
  CHECK(run_cli("gradcheck") == 0);
  CHECK(run_cli("gradcheck --tolerance 1e-30") == 4);
}

TEST_CASE("train writes three CSVs, deterministically") {
  const auto a = scratch("cli_a"), b = scratch("cli_b");
  const std::string flags = "train --dataset 2d --policy memorized --lr 0.05 --max-epochs 5 "
                            "--hidden 8 --seed 3 --eval-every 100 --out ";
  REQUIRE(run_cli(flags + a.string()) == 0);
  REQUIRE(run_cli(flags + b.string()) == 0);
  for (const char* f : {"runs.csv", "snapshots.csv", "samples.csv"}) {
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto samples = slurp(a / "samples.csv");
  CHECK(samples.rfind("id,ever_mistaken,update_count\n", 0) == 0);
}

}  // TEST_SUITE
