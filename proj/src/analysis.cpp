#include "gatetrain/analysis.hpp"

#include <cmath>
#include <vector>

#include "gatetrain/errors.hpp"
#include "gatetrain/trainer.hpp"

namespace gatetrain {

double PowerLawFit::predict(double size) const {
  return std::exp(log_prefactor + exponent * std::log(size));
}

PowerLawFit fit_power_law(std::span<const SizeCount> points) {
  const std::size_t n = points.size();
  if (n < 2) throw FitError("power-law fit needs at least 2 points");
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(points[i].size > 0.0) || !(points[i].count > 0.0)) {
      throw FitError("power-law fit needs strictly positive sizes and counts");
    }
    x[i] = std::log(points[i].size);
    y[i] = std::log(points[i].count);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("power-law fit needs at least 2 distinct sizes");

  PowerLawFit fit;
  fit.n_points = n;
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;
  if (n > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (fit.log_prefactor + fit.exponent * x[i]);
      ssr += r * r;
    }
    fit.exponent_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

std::optional<double> savings_ratio(const RunMetrics& gated, const RunMetrics& baseline,
                                    double target) {
  const Snapshot* g = first_reaching(gated.snapshots, target);
  const Snapshot* b = first_reaching(baseline.snapshots, target);
  if (!g || !b || b->update_steps == 0) return std::nullopt;
  return static_cast<double>(g->update_steps) / static_cast<double>(b->update_steps);
}

}  // namespace gatetrain
