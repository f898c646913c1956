// Serial reference vs OpenMP kernels on MNIST-shaped synthetic data.

#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "gatetrain/datasets.hpp"
#include "gatetrain/kernels.hpp"
#include "gatetrain/netcore.hpp"
#include "gatetrain/random.hpp"

namespace {

using namespace gatetrain;

LabeledDataset random_images(std::size_t n, std::uint64_t seed) {
  LabeledDataset ds;
  ds.feature_dim = 784;
  ds.n_classes = 10;
  Rng rng(seed);
  std::vector<double> x(784);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = uniform01(rng) < 0.8 ? 0.0 : uniform01(rng);
    ds.push_back(x, uniform_index(rng, 10), i);
  }
  return ds;
}

const LabeledDataset& images() {
  static const LabeledDataset ds = random_images(4000, 7);
  return ds;
}

const Mlp& network() {
  static const Mlp mlp = [] {
    const std::size_t sizes[] = {784, 200, 10};
    return init_network(sizes, 1);
  }();
  return mlp;
}

void BM_PredictAllSerial(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::predict_all_serial(network(), images()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(images().size()));
}

void BM_PredictAllOmp(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::predict_all(network(), images()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(images().size()));
  state.counters["threads"] = kernels::max_threads();
}

void BM_BlurSerial(benchmark::State& state) {
  const auto kernel = gaussian_kernel(static_cast<double>(state.range(0)));
  LabeledDataset out = images();
  for (auto _ : state) {
    kernels::blur_images_serial(images(), out, 28, 28, kernel);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(images().size()));
}

void BM_BlurOmp(benchmark::State& state) {
  const auto kernel = gaussian_kernel(static_cast<double>(state.range(0)));
  LabeledDataset out = images();
  for (auto _ : state) {
    kernels::blur_images(images(), out, 28, 28, kernel);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(images().size()));
  state.counters["threads"] = kernels::max_threads();
}

}  // namespace

BENCHMARK(BM_PredictAllSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictAllOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlurSerial)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlurOmp)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
