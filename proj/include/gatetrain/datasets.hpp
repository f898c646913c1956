#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gatetrain {

/// Samples stored contiguously, one row of `feature_dim` doubles per sample.
/// `ids` are 0..n-1 positions used to index per-sample state (mistake memory,
/// update counts); `source_ids` map each sample back to the dataset it was
/// derived from (identity for freshly loaded data).
struct LabeledDataset {
  std::size_t feature_dim = 0;
  std::size_t n_classes = 0;
  std::vector<double> features;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> source_ids;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  std::span<const double> sample(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  std::span<double> sample(std::size_t i) {
    return {features.data() + i * feature_dim, feature_dim};
  }

  /// Append one sample; its id is the next position.
  void push_back(std::span<const double> x, std::size_t label, std::size_t source_id);

  /// Throws ShapeError/InputError when an invariant is broken.
  void validate() const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;  // 2051
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;  // 2049

struct IdxHeader {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
};

/// Parses the big-endian header. Throws ParseError("magic"/"dims").
IdxHeader parse_idx_header(std::span<const std::uint8_t> bytes);

/// Builds a dataset from raw IDX image and label file contents. Pixels are
/// scaled to [0, 1]; images are flattened row-major; n_classes is max label + 1.
LabeledDataset parse_idx(std::span<const std::uint8_t> image_bytes,
                         std::span<const std::uint8_t> label_bytes);

/// Reads and parses an uncompressed IDX pair. Throws IoError naming the path.
LabeledDataset load_idx(const std::filesystem::path& image_path,
                        const std::filesystem::path& label_path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// Uniform sample without replacement. ids are re-based to 0..size-1 and
/// source_ids hold the parent ids.
LabeledDataset subset(const LabeledDataset& dataset, std::size_t size, std::uint64_t seed);

/// Samples whose label is in `classes`, in original order, ids re-based.
/// n_classes is kept from the parent.
LabeledDataset filter_classes(const LabeledDataset& dataset,
                              std::span<const std::size_t> classes);

/// Normalized 1-D Gaussian of radius ceil(3 sigma). sigma 0 gives {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Separable convolution of one image with zero-padded borders.
void blur_image(std::span<const double> in, std::span<double> out, std::size_t height,
                std::size_t width, std::span<const double> kernel);

struct PixelMoments {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Global mean and population standard deviation over every feature value.
PixelMoments pixel_moments(const LabeledDataset& dataset);

/// Affine rescale of every feature so the global moments equal `target`.
void match_moments(LabeledDataset& dataset, const PixelMoments& target);

/// Blurs every image and restores the original global mean and std.
LabeledDataset gaussian_blur(const LabeledDataset& dataset, double sigma,
                             std::size_t height, std::size_t width);

/// Two interleaving half-moons with N(0, 0.2^2) noise, standardized per axis.
LabeledDataset make_2d_task(std::size_t n, std::uint64_t seed);

std::vector<double> mirror_horizontal(std::span<const double> image, std::size_t height,
                                      std::size_t width);

/// Moves content by (dx, dy) pixels; vacated pixels become zero.
std::vector<double> shift_image(std::span<const double> image, std::size_t height,
                                std::size_t width, int dx, int dy);

/// Each sample becomes `factor` consecutive samples: the original, then
/// factor-1 copies with a random mirror and a random shift of up to 2 pixels.
LabeledDataset augment(const LabeledDataset& dataset, std::size_t factor,
                       std::uint64_t seed, std::size_t height, std::size_t width);

struct DatasetPair {
  LabeledDataset train;
  LabeledDataset test;
};

/// Loads MNIST ("mnist") or EMNIST-Digits ("emnist-digits") from a directory
/// of uncompressed IDX files using their standard file names.
DatasetPair load_image_dataset(const std::string& name, const std::filesystem::path& dir);

}  // namespace gatetrain
