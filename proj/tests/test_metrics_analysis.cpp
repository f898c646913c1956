#include <doctest.h>

#include <cmath>
#include <vector>

#include "gatetrain/analysis.hpp"
#include "gatetrain/errors.hpp"
#include "gatetrain/metrics.hpp"
#include "gatetrain/random.hpp"
#include "gatetrain/trainer.hpp"

using namespace gatetrain;

namespace {

RunMetrics with_snapshots(std::vector<std::pair<std::size_t, double>> points) {
  RunMetrics m;
  for (auto [updates, acc] : points) {
    Snapshot s;
    s.update_steps = updates;
    s.forward_steps = updates;
    s.test_accuracy = acc;
    m.snapshots.push_back(s);
  }
  return m;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("record_update") {
  RunMetrics m(4);
  record_update(m, 0.35, 1, 10);
  CHECK(m.update_steps == 1);
  CHECK(m.m1_energy == doctest::Approx(0.35));
  record_update(m, 0.15, 1, 10);
  CHECK(m.update_steps == 2);
  CHECK(m.m1_energy == doctest::Approx(0.50));
  record_update(m, 0.0, 3, 10);
  CHECK(m.update_steps == 3);
  CHECK(m.m1_energy == doctest::Approx(0.50));
  CHECK(m.per_sample_updates == std::vector<std::size_t>{0, 2, 0, 1});
  CHECK(m.plastic_parameter_updates == 30);
  CHECK_THROWS_AS(record_update(m, -0.1, 0, 10), InternalError);
  CHECK_THROWS_AS(record_update(m, std::nan(""), 0, 10), InternalError);
  CHECK_THROWS_AS(record_update(m, 0.1, 4, 10), IndexError);
}

TEST_CASE("normalized_updates") {
  RunMetrics m(100);
  CHECK(normalized_updates(m, 50, 100) == 0.0);
  for (std::size_t i = 0; i < 100; ++i) record_update(m, 0.1, i, 50);
  CHECK(normalized_updates(m, 50, 100) == 1.0);

  RunMetrics half(100);
  for (std::size_t i = 0; i < 100; ++i) record_update(half, 0.1, i, 25);
  CHECK(normalized_updates(half, 50, 100) == 0.5);
  CHECK_THROWS_AS(normalized_updates(m, 0, 100), ConfigError);
  CHECK_THROWS_AS(normalized_updates(m, 50, 0), ConfigError);
}

TEST_CASE("weight_norms") {
  const std::size_t sizes[] = {2, 2};
  const Mlp a = init_network(sizes, 1);
  CHECK(weight_norms(a, a).l1 == 0.0);
  CHECK(weight_norms(a, a).l2 == 0.0);
  Mlp b = a;
  b.layers[0].weights.data[1] -= 3.0;
  CHECK(weight_norms(b, a).l1 == doctest::Approx(3.0));
  CHECK(weight_norms(b, a).l2 == doctest::Approx(3.0));
  b.layers[0].biases[0] += 4.0;
  CHECK(weight_norms(b, a).l1 == doctest::Approx(7.0));
  CHECK(weight_norms(b, a).l2 == doctest::Approx(5.0));
  const std::size_t other[] = {2, 3};
  CHECK_THROWS_AS(weight_norms(init_network(other, 1), a), ShapeError);
}

TEST_CASE("accuracy and group accuracy") {
  LabeledDataset ds;
  ds.feature_dim = 1;
  ds.n_classes = 4;
  for (std::size_t l : {0u, 1u, 2u, 2u}) ds.push_back(std::vector<double>{0.0}, l, 0);
  const std::vector<std::size_t> preds{0, 2, 2, 1};
  CHECK(accuracy(preds, ds) == doctest::Approx(0.5));
  const std::size_t g[] = {2};
  CHECK(group_accuracy(preds, ds, g) == doctest::Approx(0.5));
  const std::size_t none[] = {3};
  CHECK(std::isnan(group_accuracy(preds, ds, none)));
}

}  // TEST_SUITE

TEST_SUITE("analysis") {

TEST_CASE("power-law fit examples") {
  const SizeCount pts[] = {{10, 3.162}, {100, 10}, {1000, 31.62}};
  const auto f = fit_power_law(pts);
  CHECK(std::fabs(f.exponent - 0.5) < 1e-3);
  CHECK(f.exponent_stderr < 1e-3);
  CHECK(f.n_points == 3);

  const SizeCount flat[] = {{1, 2}, {10, 2}};
  const auto g = fit_power_law(flat);
  CHECK(std::fabs(g.exponent) < 1e-15);
  CHECK(g.exponent_stderr == 0.0);
  CHECK(g.predict(1000) == doctest::Approx(2.0));
}

TEST_CASE("exact recovery on noiseless power laws") {
  for (double b = -2.0; b <= 2.0; b += 0.25) {
    std::vector<SizeCount> pts;
    for (double s : {4e3, 8e3, 1.6e4, 3.2e4, 6e4}) pts.push_back({s, 3.7 * std::pow(s, b)});
    const auto f = fit_power_law(pts);
    CAPTURE(b);
    CHECK(std::fabs(f.exponent - b) < 1e-9);
    CHECK(f.exponent_stderr < 1e-9);
    CHECK(std::fabs(f.log_prefactor - std::log(3.7)) < 1e-8);
  }
}

TEST_CASE("scale invariance") {
  Rng rng(4);
  std::vector<SizeCount> pts, scaled;
  for (double s = 100; s < 1e5; s *= 2) {
    const double c = std::pow(s, 0.6) * std::exp(0.1 * standard_normal(rng));
    pts.push_back({s, c});
    scaled.push_back({s, 17.0 * c});
  }
  const auto a = fit_power_law(pts);
  const auto b = fit_power_law(scaled);
  CHECK(a.exponent == doctest::Approx(b.exponent).epsilon(1e-12));
  CHECK(b.log_prefactor - a.log_prefactor == doctest::Approx(std::log(17.0)));
  CHECK(a.exponent_stderr > 0.0);
}

TEST_CASE("fit errors") {
  const SizeCount one[] = {{1, 1}};
  CHECK_THROWS_AS(fit_power_law(one), FitError);
  const SizeCount neg[] = {{1, 1}, {2, -1}};
  CHECK_THROWS_AS(fit_power_law(neg), FitError);
  const SizeCount zero[] = {{0, 1}, {2, 1}};
  CHECK_THROWS_AS(fit_power_law(zero), FitError);
  const SizeCount same_x[] = {{5, 1}, {5, 2}, {5, 3}};
  CHECK_THROWS_AS(fit_power_law(same_x), FitError);
}

TEST_CASE("steps_to_accuracy") {
  const auto m = with_snapshots({{100, 0.90}, {200, 0.96}});
  const double t[] = {0.95, 0.97};
  const auto r = steps_to_accuracy(m.snapshots, t);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == std::optional<std::size_t>(200));
  CHECK_FALSE(r[1].has_value());
  const double first[] = {0.5};
  CHECK(steps_to_accuracy(m.snapshots, first)[0] == std::optional<std::size_t>(100));
  CHECK(steps_to_accuracy(m.snapshots, std::span<const double>{}).empty());
}

TEST_CASE("savings ratio") {
  const auto a = with_snapshots({{50, 0.9}, {100, 0.96}});
  const auto b = with_snapshots({{200, 0.9}, {400, 0.96}});
  CHECK(*savings_ratio(a, a, 0.95) == 1.0);
  CHECK(*savings_ratio(a, b, 0.95) == doctest::Approx(0.25));
  CHECK(*savings_ratio(a, b, 0.95) * *savings_ratio(b, a, 0.95) == doctest::Approx(1.0));
  CHECK_FALSE(savings_ratio(a, b, 0.99).has_value());
  const auto never = with_snapshots({{10, 0.5}});
  CHECK_FALSE(savings_ratio(a, never, 0.95).has_value());
  CHECK_FALSE(savings_ratio(never, a, 0.95).has_value());
}

}  // TEST_SUITE
