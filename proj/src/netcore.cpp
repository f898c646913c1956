#include "gatetrain/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gatetrain/errors.hpp"
#include "gatetrain/linalg.hpp"
#include "gatetrain/random.hpp"

namespace gatetrain {

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.parameter_count();
  return n;
}

std::size_t Mlp::plastic_parameter_count() const {
  std::size_t n = 0;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (plastic[k]) n += layers[k].parameter_count();
  }
  return n;
}

void Mlp::freeze_hidden() {
  for (std::size_t k = 0; k + 1 < plastic.size(); ++k) plastic[k] = false;
}

void Mlp::validate() const {
  if (layer_sizes.size() < 2 || layers.size() != layer_sizes.size() - 1) {
    throw ShapeError("network needs at least one layer and matching layer_sizes");
  }
  if (plastic.size() != layers.size()) {
    throw ShapeError("plastic flags: expected " + std::to_string(layers.size()) +
                     ", got " + std::to_string(plastic.size()));
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.in_dim() != layer_sizes[k] || l.out_dim() != layer_sizes[k + 1] ||
        l.biases.size() != l.out_dim() ||
        l.weights.data.size() != l.in_dim() * l.out_dim()) {
      throw ShapeError("layer " + std::to_string(k) + " does not match layer_sizes");
    }
  }
}

Mlp init_network(std::span<const std::size_t> layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ConfigError("layer_sizes needs at least 2 entries");
  }
  for (auto s : layer_sizes) {
    if (s < 1) throw ConfigError("layer sizes must be >= 1");
  }
  Mlp mlp;
  mlp.layer_sizes.assign(layer_sizes.begin(), layer_sizes.end());
  Rng rng(seed);
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    const std::size_t fan_in = layer_sizes[k];
    const std::size_t fan_out = layer_sizes[k + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    LayerParams layer{Matrix(fan_out, fan_in), std::vector<double>(fan_out, 0.0)};
    for (auto& w : layer.weights.data) w = uniform(rng, -bound, bound);
    mlp.layers.push_back(std::move(layer));
  }
  mlp.plastic.assign(mlp.layers.size(), true);
  return mlp;
}

void softmax_in_place(std::span<double> logits) {
  if (logits.empty()) return;
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& z : logits) {
    z = std::exp(z - m);
    sum += z;
  }
  for (auto& z : logits) z /= sum;
}

namespace {

void affine(const LayerParams& layer, const double* in, double* out) {
  const std::size_t n_in = layer.in_dim();
  const double* w = layer.weights.data.data();
  for (std::size_t i = 0; i < layer.out_dim(); ++i) {
    out[i] = linalg::dot(w + i * n_in, in, n_in) + layer.biases[i];
  }
}

}  // namespace

void forward(const Mlp& mlp, std::span<const double> input, ForwardTrace& trace) {
  if (input.size() != mlp.input_dim()) {
    throw ShapeError("input length " + std::to_string(input.size()) +
                     " != network input " + std::to_string(mlp.input_dim()));
  }
  const std::size_t n_layers = mlp.layers.size();
  trace.input.assign(input.begin(), input.end());
  trace.pre_activations.resize(n_layers);
  trace.post_activations.resize(n_layers);

  const double* in = trace.input.data();
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto& layer = mlp.layers[k];
    auto& pre = trace.pre_activations[k];
    auto& post = trace.post_activations[k];
    pre.resize(layer.out_dim());
    post.resize(layer.out_dim());
    affine(layer, in, pre.data());
    if (k + 1 < n_layers) {
      for (std::size_t i = 0; i < pre.size(); ++i) post[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    } else {
      std::copy(pre.begin(), pre.end(), post.begin());
      softmax_in_place(post);
    }
    in = post.data();
  }
}

ForwardTrace forward(const Mlp& mlp, std::span<const double> input) {
  ForwardTrace trace;
  forward(mlp, input, trace);
  return trace;
}

std::size_t predict(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

double cross_entropy(const Mlp& mlp, std::span<const double> input, std::size_t label) {
  if (label >= mlp.n_classes()) throw InputError("label out of range");
  // Computed from the logits to stay accurate when p[label] underflows.
  const ForwardTrace trace = forward(mlp, input);
  const auto& logits = trace.pre_activations.back();
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  return -(logits[label] - m - std::log(sum));
}

GradientSet zero_gradients(const Mlp& mlp) {
  GradientSet g;
  for (const auto& layer : mlp.layers) {
    g.weights.emplace_back(layer.out_dim(), layer.in_dim());
    g.biases.emplace_back(layer.out_dim(), 0.0);
  }
  return g;
}

void backward(const Mlp& mlp, const ForwardTrace& trace, std::size_t label,
              GradientSet& grads, GradientScope scope) {
  const std::size_t n_layers = mlp.layers.size();
  if (label >= mlp.n_classes()) {
    throw InputError("label " + std::to_string(label) + " >= n_classes " +
                     std::to_string(mlp.n_classes()));
  }
  if (trace.post_activations.size() != n_layers || trace.input.size() != mlp.input_dim()) {
    throw ShapeError("trace does not belong to this network");
  }
  if (grads.weights.size() != n_layers || grads.biases.size() != n_layers) {
    grads = zero_gradients(mlp);
  }

  std::size_t lowest = 0;
  if (scope == GradientScope::PlasticOnly) {
    while (lowest < n_layers && !mlp.plastic[lowest]) ++lowest;
    if (lowest == n_layers) return;
  }

  const auto probs = trace.output_probs();
  std::vector<double> delta(probs.begin(), probs.end());
  delta[label] -= 1.0;
  std::vector<double> below;

  for (std::size_t k = n_layers; k-- > lowest;) {
    const auto& layer = mlp.layers[k];
    const std::size_t n_in = layer.in_dim();
    const std::size_t n_out = layer.out_dim();
    const double* in = k == 0 ? trace.input.data() : trace.post_activations[k - 1].data();

    const bool want = scope == GradientScope::All || mlp.plastic[k];
    if (want) {
      auto& gw = grads.weights[k];
      if (gw.rows != n_out || gw.cols != n_in) gw = Matrix(n_out, n_in);
      grads.biases[k].assign(delta.begin(), delta.end());
      for (std::size_t i = 0; i < n_out; ++i) {
        double* row = gw.data.data() + i * n_in;
        const double d = delta[i];
        for (std::size_t j = 0; j < n_in; ++j) row[j] = d * in[j];
      }
    }
    if (k == lowest) break;

    below.assign(n_in, 0.0);
    const double* w = layer.weights.data.data();
    for (std::size_t i = 0; i < n_out; ++i) {
      if (delta[i] != 0.0) linalg::axpy(delta[i], w + i * n_in, below.data(), n_in);
    }
    const auto& pre = trace.pre_activations[k - 1];
    for (std::size_t j = 0; j < n_in; ++j) {
      if (!(pre[j] > 0.0)) below[j] = 0.0;
    }
    delta.swap(below);
  }
}

GradientSet backward(const Mlp& mlp, const ForwardTrace& trace, std::size_t label) {
  GradientSet g = zero_gradients(mlp);
  backward(mlp, trace, label, g, GradientScope::All);
  return g;
}

double apply_update(Mlp& mlp, const GradientSet& grads, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  const std::size_t n_layers = mlp.layers.size();
  if (grads.weights.size() != n_layers || grads.biases.size() != n_layers) {
    throw ShapeError("gradient set does not match network");
  }
  double l1 = 0.0;
  for (std::size_t k = 0; k < n_layers; ++k) {
    if (!mlp.plastic[k]) continue;
    auto& layer = mlp.layers[k];
    const auto& gw = grads.weights[k];
    const auto& gb = grads.biases[k];
    if (gw.rows != layer.out_dim() || gw.cols != layer.in_dim() ||
        gb.size() != layer.biases.size()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(k));
    }
    l1 += linalg::sgd_step(layer.weights.data.data(), gw.data.data(), lr, gw.data.size());
    l1 += linalg::sgd_step(layer.biases.data(), gb.data(), lr, gb.size());
  }
  return l1;
}

}  // namespace gatetrain
