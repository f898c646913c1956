#include "gatetrain/metrics.hpp"

#include <cmath>
#include <string>

#include "gatetrain/errors.hpp"

namespace gatetrain {

void record_update(RunMetrics& metrics, double delta_l1, std::size_t sample_id,
                   std::size_t plastic_parameters) {
  if (!(delta_l1 >= 0.0)) {
    throw InternalError("negative or NaN update norm " + std::to_string(delta_l1));
  }
  if (sample_id >= metrics.per_sample_updates.size()) {
    throw IndexError("sample id " + std::to_string(sample_id) + " outside metrics table");
  }
  ++metrics.update_steps;
  metrics.m1_energy += delta_l1;
  metrics.plastic_parameter_updates += plastic_parameters;
  ++metrics.per_sample_updates[sample_id];
}

double normalized_updates(const RunMetrics& metrics, std::size_t total_params,
                          std::size_t dataset_size) {
  if (total_params == 0 || dataset_size == 0) {
    throw ConfigError("normalized_updates needs positive network and dataset sizes");
  }
  return static_cast<double>(metrics.plastic_parameter_updates) /
         (static_cast<double>(total_params) * static_cast<double>(dataset_size));
}

WeightNormReport weight_norms(const Mlp& final_net, const Mlp& initial_net) {
  if (final_net.layer_sizes != initial_net.layer_sizes) {
    throw ShapeError("weight_norms: architectures differ");
  }
  WeightNormReport r;
  double sq = 0.0;
  auto add = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      r.l1 += std::fabs(d);
      sq += d * d;
    }
  };
  for (std::size_t k = 0; k < final_net.layers.size(); ++k) {
    add(final_net.layers[k].weights.data, initial_net.layers[k].weights.data);
    add(final_net.layers[k].biases, initial_net.layers[k].biases);
  }
  r.l2 = std::sqrt(sq);
  return r;
}

double accuracy(std::span<const std::size_t> predictions, const LabeledDataset& dataset) {
  if (predictions.size() != dataset.size()) throw ShapeError("one prediction per sample");
  if (dataset.empty()) return kNotMeasured;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    correct += predictions[i] == dataset.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

double group_accuracy(std::span<const std::size_t> predictions, const LabeledDataset& dataset,
                      std::span<const std::size_t> classes) {
  if (predictions.size() != dataset.size()) throw ShapeError("one prediction per sample");
  std::vector<bool> member(dataset.n_classes, false);
  for (auto c : classes) {
    if (c < member.size()) member[c] = true;
  }
  std::size_t total = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!member[dataset.labels[i]]) continue;
    ++total;
    correct += predictions[i] == dataset.labels[i];
  }
  if (total == 0) return kNotMeasured;
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace gatetrain
