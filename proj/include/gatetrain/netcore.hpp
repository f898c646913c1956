#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gatetrain {

/// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  bool operator==(const Matrix&) const = default;
};

/// One dense layer: weights are out_dim x in_dim.
struct LayerParams {
  Matrix weights;
  std::vector<double> biases;

  std::size_t in_dim() const { return weights.cols; }
  std::size_t out_dim() const { return weights.rows; }
  std::size_t parameter_count() const { return weights.data.size() + biases.size(); }

  bool operator==(const LayerParams&) const = default;
};

/// Feed-forward network: ReLU on every hidden layer, softmax on the last.
/// `plastic[k]` false freezes layer k against apply_update.
struct Mlp {
  std::vector<std::size_t> layer_sizes;
  std::vector<LayerParams> layers;
  std::vector<bool> plastic;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t n_classes() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;
  std::size_t plastic_parameter_count() const;

  /// Freeze every layer except the output layer.
  void freeze_hidden();

  /// Throws ShapeError unless dimensions chain and flags match layer count.
  void validate() const;
};

/// Activations cached by forward() for backward().
struct ForwardTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre_activations;
  std::vector<std::vector<double>> post_activations;  // last entry: softmax probs

  std::span<const double> output_probs() const { return post_activations.back(); }
};

/// Parameter gradients, shaped exactly like the network.
struct GradientSet {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

enum class GradientScope {
  All,          // gradients for every layer
  PlasticOnly,  // skip frozen layers; their entries are left untouched
};

/// Uniform weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases, all plastic.
Mlp init_network(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

/// Softmax with the max logit subtracted first.
void softmax_in_place(std::span<double> logits);

void forward(const Mlp& mlp, std::span<const double> input, ForwardTrace& trace);
ForwardTrace forward(const Mlp& mlp, std::span<const double> input);

/// Argmax, lowest index on ties.
std::size_t predict(std::span<const double> probs);
inline std::size_t predict(const ForwardTrace& trace) {
  return predict(trace.output_probs());
}

/// Cross-entropy -log(p[label]) for a single sample.
double cross_entropy(const Mlp& mlp, std::span<const double> input, std::size_t label);

GradientSet zero_gradients(const Mlp& mlp);

/// Gradient of cross-entropy w.r.t. every parameter. The output logit
/// gradient is probs - onehot(label).
void backward(const Mlp& mlp, const ForwardTrace& trace, std::size_t label,
              GradientSet& grads, GradientScope scope = GradientScope::All);
GradientSet backward(const Mlp& mlp, const ForwardTrace& trace, std::size_t label);

/// params -= lr * grad on plastic layers only. Returns the L1 norm of the
/// applied deltas (weights and biases).
double apply_update(Mlp& mlp, const GradientSet& grads, double lr);

}  // namespace gatetrain
