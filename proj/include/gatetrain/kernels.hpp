#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gatetrain/datasets.hpp"
#include "gatetrain/netcore.hpp"

// Data-parallel kernels. Each OpenMP kernel has a serial reference with the
// same signature; the two must agree bit-for-bit (tests/test_kernels.cpp).
namespace gatetrain::kernels {

/// Predicted class for every sample, evaluated in blocks across threads.
std::vector<std::size_t> predict_all(const Mlp& mlp, const LabeledDataset& dataset);

/// One forward() + predict() per sample.
std::vector<std::size_t> predict_all_serial(const Mlp& mlp, const LabeledDataset& dataset);

/// Blurs every image of `in` into the matching row of `out` (same shape).
void blur_images(const LabeledDataset& in, LabeledDataset& out, std::size_t height,
                 std::size_t width, std::span<const double> kernel);

void blur_images_serial(const LabeledDataset& in, LabeledDataset& out, std::size_t height,
                        std::size_t width, std::span<const double> kernel);

/// Number of worker threads OpenMP will use for the kernels above.
int max_threads();

}  // namespace gatetrain::kernels
