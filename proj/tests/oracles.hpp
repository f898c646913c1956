#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gatetrain/netcore.hpp"

namespace oracle {

/// Central finite difference of the cross-entropy w.r.t. every parameter,
/// weights of each layer first, then its biases.
inline std::vector<double> numeric_gradient(gatetrain::Mlp mlp, std::span<const double> x,
                                            std::size_t label, double h = 1e-5) {
  std::vector<double> out;
  auto probe = [&](double& p) {
    const double saved = p;
    p = saved + h;
    const double up = gatetrain::cross_entropy(mlp, x, label);
    p = saved - h;
    const double down = gatetrain::cross_entropy(mlp, x, label);
    p = saved;
    out.push_back((up - down) / (2 * h));
  };
  for (auto& layer : mlp.layers) {
    for (auto& w : layer.weights.data) probe(w);
    for (auto& b : layer.biases) probe(b);
  }
  return out;
}

inline std::vector<double> flatten(const gatetrain::GradientSet& g) {
  std::vector<double> out;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.insert(out.end(), g.weights[l].data.begin(), g.weights[l].data.end());
    out.insert(out.end(), g.biases[l].begin(), g.biases[l].end());
  }
  return out;
}

/// Dense, non-separable 2-D convolution with the outer product of `k`,
/// zero outside the image.
inline std::vector<double> dense_blur(std::span<const double> img, std::size_t h, std::size_t w,
                                      std::span<const double> k) {
  const long r = static_cast<long>(k.size() / 2);
  std::vector<double> out(h * w, 0.0);
  for (long y = 0; y < static_cast<long>(h); ++y) {
    for (long x = 0; x < static_cast<long>(w); ++x) {
      double acc = 0.0;
      for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          const long sy = y + dy, sx = x + dx;
          if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
          acc += k[static_cast<std::size_t>(dy + r)] * k[static_cast<std::size_t>(dx + r)] *
                 img[static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)];
        }
      }
      out[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = acc;
    }
  }
  return out;
}

/// Dense Gaussian weights exp(-d^2 / 2 sigma^2) over radius ceil(3 sigma), normalized.
inline std::vector<double> gaussian(double sigma) {
  if (sigma == 0.0) return {1.0};
  const long r = static_cast<long>(std::ceil(3 * sigma));
  std::vector<double> k;
  double sum = 0.0;
  for (long i = -r; i <= r; ++i) {
    k.push_back(std::exp(-double(i * i) / (2 * sigma * sigma)));
    sum += k.back();
  }
  for (auto& v : k) v /= sum;
  return k;
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

/// IDX image file bytes, built field by field.
inline std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                            const std::vector<std::uint8_t>& pixels) {
  std::vector<std::uint8_t> out{0, 0, 0x08, 0x03};
  put_u32(out, n);
  put_u32(out, rows);
  put_u32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

inline std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out{0, 0, 0x08, 0x01};
  put_u32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

}  // namespace oracle
