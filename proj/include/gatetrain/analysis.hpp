#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "gatetrain/metrics.hpp"

namespace gatetrain {

/// count ~ prefactor * size^exponent, fitted by OLS in log-log space.
struct PowerLawFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;  // natural log
  double exponent_stderr = 0.0;
  std::size_t n_points = 0;

  double predict(double size) const;
};

struct SizeCount {
  double size = 0.0;
  double count = 0.0;
};

/// Needs >= 2 points, all positive, >= 2 distinct sizes; otherwise FitError.
/// With exactly two points the slope standard error is reported as 0.
PowerLawFit fit_power_law(std::span<const SizeCount> points);

/// gated / baseline update steps at the first snapshot reaching `target`
/// test accuracy; nullopt when either run never got there.
std::optional<double> savings_ratio(const RunMetrics& gated, const RunMetrics& baseline,
                                    double target);

}  // namespace gatetrain
