#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace gatetrain::linalg {

// Dense primitives shared by the per-sample training path and the batched
// evaluation kernels. Both paths must call these so that a prediction made
// during training is bit-identical to the one made during evaluation.

inline constexpr std::size_t kLanes = 8;

/// Dot product with a fixed 8-lane accumulation order.
inline double dot(const double* a, const double* b, std::size_t n) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t k = 0; k < kLanes; ++k) acc[k] += a[i + k] * b[i + k];
  }
  for (std::size_t k = 0; i < n; ++i, ++k) acc[k] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return dot(a.data(), b.data(), a.size());
}

/// y += alpha * x
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

/// params -= lr * grads; returns the L1 norm of the applied step.
inline double sgd_step(double* params, const double* grads, double lr,
                       std::size_t n) {
  double acc[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t k = 0; k < kLanes; ++k) {
      const double d = lr * grads[i + k];
      params[i + k] -= d;
      acc[k] += std::fabs(d);
    }
  }
  for (std::size_t k = 0; i < n; ++i, ++k) {
    const double d = lr * grads[i];
    params[i] -= d;
    acc[k] += std::fabs(d);
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

}  // namespace gatetrain::linalg
