#include "gatetrain/kernels.hpp"

#include <algorithm>
#include <array>

#include <omp.h>

#include "gatetrain/errors.hpp"
#include "gatetrain/linalg.hpp"

namespace gatetrain::kernels {

namespace {

constexpr std::size_t kBlock = 8;

void check_shapes(const Mlp& mlp, const LabeledDataset& dataset) {
  if (!dataset.empty() && dataset.feature_dim != mlp.input_dim()) {
    throw ShapeError("dataset features do not match network input");
  }
}

// Forward pass for up to kBlock samples at once. Each weight row is streamed
// once per block instead of once per sample; the arithmetic per sample is the
// same as netcore's forward().
class BlockEvaluator {
 public:
  explicit BlockEvaluator(const Mlp& mlp) : mlp_(mlp) {
    std::size_t widest = 0;
    for (auto s : mlp.layer_sizes) widest = std::max(widest, s);
    for (auto& b : a_) b.resize(widest);
    for (auto& b : b_) b.resize(widest);
  }

  void run(const LabeledDataset& data, std::size_t first, std::size_t count,
           std::size_t* predictions) {
    const std::size_t n_layers = mlp_.layers.size();
    std::array<const double*, kBlock> in{};
    for (std::size_t s = 0; s < count; ++s) in[s] = data.sample(first + s).data();

    for (std::size_t k = 0; k < n_layers; ++k) {
      const auto& layer = mlp_.layers[k];
      const std::size_t n_in = layer.in_dim();
      const double* w = layer.weights.data.data();
      auto& out = (k % 2 == 0) ? a_ : b_;
      for (std::size_t i = 0; i < layer.out_dim(); ++i) {
        const double* row = w + i * n_in;
        for (std::size_t s = 0; s < count; ++s) {
          out[s][i] = linalg::dot(row, in[s], n_in) + layer.biases[i];
        }
      }
      if (k + 1 < n_layers) {
        for (std::size_t s = 0; s < count; ++s) {
          for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            out[s][i] = out[s][i] > 0.0 ? out[s][i] : 0.0;
          }
          in[s] = out[s].data();
        }
      } else {
        for (std::size_t s = 0; s < count; ++s) {
          std::span<double> logits(out[s].data(), layer.out_dim());
          softmax_in_place(logits);
          predictions[first + s] = predict(logits);
        }
      }
    }
  }

 private:
  const Mlp& mlp_;
  std::array<std::vector<double>, kBlock> a_;
  std::array<std::vector<double>, kBlock> b_;
};

void blur_one(const LabeledDataset& in, LabeledDataset& out, std::size_t i,
              std::size_t height, std::size_t width, std::span<const double> kernel) {
  blur_image(in.sample(i), out.sample(i), height, width, kernel);
}

void check_blur_shapes(const LabeledDataset& in, const LabeledDataset& out,
                       std::size_t height, std::size_t width) {
  if (height * width != in.feature_dim || out.feature_dim != in.feature_dim ||
      out.size() != in.size()) {
    throw ShapeError("blur: image shape does not match dataset");
  }
}

}  // namespace

std::vector<std::size_t> predict_all(const Mlp& mlp, const LabeledDataset& dataset) {
  check_shapes(mlp, dataset);
  const std::size_t n = dataset.size();
  std::vector<std::size_t> predictions(n);
  const std::ptrdiff_t n_blocks = static_cast<std::ptrdiff_t>((n + kBlock - 1) / kBlock);

#pragma omp parallel
  {
    BlockEvaluator eval(mlp);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < n_blocks; ++b) {
      const std::size_t first = static_cast<std::size_t>(b) * kBlock;
      eval.run(dataset, first, std::min(kBlock, n - first), predictions.data());
    }
  }
  return predictions;
}

std::vector<std::size_t> predict_all_serial(const Mlp& mlp, const LabeledDataset& dataset) {
  check_shapes(mlp, dataset);
  std::vector<std::size_t> predictions(dataset.size());
  ForwardTrace trace;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    forward(mlp, dataset.sample(i), trace);
    predictions[i] = predict(trace);
  }
  return predictions;
}

void blur_images(const LabeledDataset& in, LabeledDataset& out, std::size_t height,
                 std::size_t width, std::span<const double> kernel) {
  check_blur_shapes(in, out, height, width);
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    blur_one(in, out, static_cast<std::size_t>(i), height, width, kernel);
  }
}

void blur_images_serial(const LabeledDataset& in, LabeledDataset& out, std::size_t height,
                        std::size_t width, std::span<const double> kernel) {
  check_blur_shapes(in, out, height, width);
  for (std::size_t i = 0; i < in.size(); ++i) blur_one(in, out, i, height, width, kernel);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace gatetrain::kernels
