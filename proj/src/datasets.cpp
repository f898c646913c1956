#include "gatetrain/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include "gatetrain/errors.hpp"
#include "gatetrain/kernels.hpp"
#include "gatetrain/random.hpp"

namespace gatetrain {

void LabeledDataset::push_back(std::span<const double> x, std::size_t label,
                               std::size_t source_id) {
  if (x.size() != feature_dim) throw ShapeError("sample length != feature_dim");
  features.insert(features.end(), x.begin(), x.end());
  ids.push_back(labels.size());
  labels.push_back(label);
  source_ids.push_back(source_id);
}

void LabeledDataset::validate() const {
  const std::size_t n = labels.size();
  if (ids.size() != n || source_ids.size() != n || features.size() != n * feature_dim) {
    throw ShapeError("dataset columns have different lengths");
  }
  std::vector<bool> seen(n, false);
  for (auto id : ids) {
    if (id >= n || seen[id]) throw InputError("dataset ids must be a permutation of 0..n-1");
    seen[id] = true;
  }
  for (auto l : labels) {
    if (l >= n_classes) throw InputError("label " + std::to_string(l) + " >= n_classes");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw InputError("non-finite feature value");
  }
}

// --- IDX -------------------------------------------------------------------

namespace {

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

IdxHeader expect_header(std::span<const std::uint8_t> bytes, std::uint32_t magic,
                        std::size_t n_dims, const char* what) {
  IdxHeader h = parse_idx_header(bytes);
  if (h.magic != magic) {
    throw ParseError("magic", std::string(what) + " file has magic " +
                                  std::to_string(h.magic) + ", expected " +
                                  std::to_string(magic));
  }
  if (h.dims.size() != n_dims) {
    throw ParseError("dims", std::string(what) + " file has " +
                                 std::to_string(h.dims.size()) + " dimensions");
  }
  return h;
}

}  // namespace

IdxHeader parse_idx_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("magic", "file shorter than the 4-byte magic");
  IdxHeader h;
  h.magic = read_be32(bytes.data());
  const std::size_t n_dims = bytes[3];
  if (bytes.size() < 4 + 4 * n_dims) {
    throw ParseError("dims", "truncated dimension list");
  }
  for (std::size_t d = 0; d < n_dims; ++d) h.dims.push_back(read_be32(bytes.data() + 4 + 4 * d));
  return h;
}

LabeledDataset parse_idx(std::span<const std::uint8_t> image_bytes,
                         std::span<const std::uint8_t> label_bytes) {
  const IdxHeader img = expect_header(image_bytes, kIdxImageMagic, 3, "image");
  const IdxHeader lab = expect_header(label_bytes, kIdxLabelMagic, 1, "label");

  const std::size_t n = img.dims[0];
  const std::size_t dim = std::size_t{img.dims[1]} * img.dims[2];
  const std::size_t img_offset = 16;
  const std::size_t lab_offset = 8;
  if (image_bytes.size() != img_offset + n * dim) {
    throw ParseError("pixels", "expected " + std::to_string(n * dim) + " pixel bytes, found " +
                                   std::to_string(image_bytes.size() - img_offset));
  }
  if (label_bytes.size() != lab_offset + std::size_t{lab.dims[0]}) {
    throw ParseError("labels", "expected " + std::to_string(lab.dims[0]) +
                                   " label bytes, found " +
                                   std::to_string(label_bytes.size() - lab_offset));
  }
  if (lab.dims[0] != n) {
    throw ParseError("count", std::to_string(n) + " images but " +
                                  std::to_string(lab.dims[0]) + " labels");
  }

  LabeledDataset ds;
  ds.feature_dim = dim;
  ds.features.resize(n * dim);
  const std::uint8_t* px = image_bytes.data() + img_offset;
  for (std::size_t i = 0; i < n * dim; ++i) ds.features[i] = px[i] / 255.0;
  ds.labels.resize(n);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = label_bytes[lab_offset + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.n_classes = n == 0 ? 0 : max_label + 1;
  ds.ids.resize(n);
  std::iota(ds.ids.begin(), ds.ids.end(), std::size_t{0});
  ds.source_ids = ds.ids;
  return ds;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

LabeledDataset load_idx(const std::filesystem::path& image_path,
                        const std::filesystem::path& label_path) {
  const auto images = read_file(image_path);
  const auto labels = read_file(label_path);
  return parse_idx(images, labels);
}

DatasetPair load_image_dataset(const std::string& name, const std::filesystem::path& dir) {
  std::string prefix;
  if (name == "mnist") {
    prefix = "";
  } else if (name == "emnist-digits") {
    prefix = "emnist-digits-";
  } else {
    throw ConfigError("unknown image dataset '" + name + "'");
  }
  const std::string test_split = name == "mnist" ? "t10k" : "test";
  auto pick = [&](const std::string& split, const std::string& kind, const char* rank) {
    // Both "train-images-idx3-ubyte" and "train-images.idx3-ubyte" are common.
    for (const char* sep : {"-", "."}) {
      auto p = dir / (prefix + split + "-" + kind + sep + rank + "-ubyte");
      if (std::filesystem::exists(p)) return p;
    }
    throw IoError("missing " + (dir / (prefix + split + "-" + kind + "-" + rank + "-ubyte")).string());
  };
  DatasetPair out{load_idx(pick("train", "images", "idx3"), pick("train", "labels", "idx1")),
                  load_idx(pick(test_split, "images", "idx3"), pick(test_split, "labels", "idx1"))};
  const std::size_t classes = std::max(out.train.n_classes, out.test.n_classes);
  out.train.n_classes = classes;
  out.test.n_classes = classes;
  return out;
}

// --- subsets ---------------------------------------------------------------

namespace {

LabeledDataset take(const LabeledDataset& dataset, std::span<const std::size_t> positions) {
  LabeledDataset out;
  out.feature_dim = dataset.feature_dim;
  out.n_classes = dataset.n_classes;
  out.features.reserve(positions.size() * dataset.feature_dim);
  for (auto p : positions) out.push_back(dataset.sample(p), dataset.labels[p], dataset.ids[p]);
  return out;
}

}  // namespace

LabeledDataset subset(const LabeledDataset& dataset, std::size_t size, std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (size > n) {
    throw ConfigError("subset size " + std::to_string(size) + " exceeds dataset size " +
                      std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < size; ++i) {
    std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  }
  idx.resize(size);
  return take(dataset, idx);
}

LabeledDataset filter_classes(const LabeledDataset& dataset,
                              std::span<const std::size_t> classes) {
  std::vector<bool> keep(dataset.n_classes, false);
  for (auto c : classes) {
    if (c >= dataset.n_classes) throw ConfigError("class " + std::to_string(c) + " out of range");
    keep[c] = true;
  }
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (keep[dataset.labels[i]]) positions.push_back(i);
  }
  return take(dataset, positions);
}

// --- blur ------------------------------------------------------------------

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("blur sigma must be >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

void blur_image(std::span<const double> in, std::span<double> out, std::size_t height,
                std::size_t width, std::span<const double> kernel) {
  if (in.size() != height * width || out.size() != in.size()) {
    throw ShapeError("blur_image: buffer size != height * width");
  }
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto w = static_cast<std::ptrdiff_t>(width);
  const auto r = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> tmp(in.size(), 0.0);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t t = -r; t <= r; ++t) {
        const std::ptrdiff_t xx = x + t;
        if (xx >= 0 && xx < w) acc += kernel[t + r] * in[y * w + xx];
      }
      tmp[y * w + x] = acc;
    }
  }
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t t = -r; t <= r; ++t) {
        const std::ptrdiff_t yy = y + t;
        if (yy >= 0 && yy < h) acc += kernel[t + r] * tmp[yy * w + x];
      }
      out[y * w + x] = acc;
    }
  }
}

PixelMoments pixel_moments(const LabeledDataset& dataset) {
  const std::size_t total = dataset.features.size();
  if (total == 0) return {};
  double sum = 0.0;
  for (double v : dataset.features) sum += v;
  const double mean = sum / static_cast<double>(total);
  double ss = 0.0;
  for (double v : dataset.features) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(total))};
}

void match_moments(LabeledDataset& dataset, const PixelMoments& target) {
  const PixelMoments now = pixel_moments(dataset);
  const double scale = now.stddev > 0.0 ? target.stddev / now.stddev : 0.0;
  for (auto& v : dataset.features) v = (v - now.mean) * scale + target.mean;
}

LabeledDataset gaussian_blur(const LabeledDataset& dataset, double sigma,
                             std::size_t height, std::size_t width) {
  const auto kernel = gaussian_kernel(sigma);
  if (height * width != dataset.feature_dim) {
    throw ShapeError("blur: height * width != feature_dim");
  }
  LabeledDataset out = dataset;
  if (sigma == 0.0) return out;
  kernels::blur_images(dataset, out, height, width, kernel);
  match_moments(out, pixel_moments(dataset));
  return out;
}

// --- synthetic 2-D task ----------------------------------------------------

LabeledDataset make_2d_task(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("2-D task needs at least 2 samples");
  constexpr double kNoise = 0.2;
  Rng rng(seed);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = i % 2;
  shuffle(labels, rng);

  LabeledDataset ds;
  ds.feature_dim = 2;
  ds.n_classes = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = uniform(rng, 0.0, std::numbers::pi);
    double x = std::cos(t);
    double y = std::sin(t);
    if (labels[i] == 1) {
      x = 1.0 - x;
      y = 0.5 - y;
    }
    x += kNoise * standard_normal(rng);
    y += kNoise * standard_normal(rng);
    const double p[2] = {x, y};
    ds.push_back(p, labels[i], i);
  }
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.features[2 * i + axis];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = ds.features[2 * i + axis] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      auto& v = ds.features[2 * i + axis];
      v = (v - mean) / sd;
    }
  }
  return ds;
}

// --- augmentation ----------------------------------------------------------

std::vector<double> mirror_horizontal(std::span<const double> image, std::size_t height,
                                      std::size_t width) {
  if (image.size() != height * width) throw ShapeError("mirror: bad image size");
  std::vector<double> out(image.size());
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      out[y * width + x] = image[y * width + (width - 1 - x)];
    }
  }
  return out;
}

std::vector<double> shift_image(std::span<const double> image, std::size_t height,
                                std::size_t width, int dx, int dy) {
  if (image.size() != height * width) throw ShapeError("shift: bad image size");
  std::vector<double> out(image.size(), 0.0);
  const auto h = static_cast<std::ptrdiff_t>(height);
  const auto w = static_cast<std::ptrdiff_t>(width);
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    const std::ptrdiff_t sy = y - dy;
    if (sy < 0 || sy >= h) continue;
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      const std::ptrdiff_t sx = x - dx;
      if (sx >= 0 && sx < w) out[y * w + x] = image[sy * w + sx];
    }
  }
  return out;
}

LabeledDataset augment(const LabeledDataset& dataset, std::size_t factor,
                       std::uint64_t seed, std::size_t height, std::size_t width) {
  if (factor < 1) throw ConfigError("augmentation factor must be >= 1");
  if (factor == 1) return dataset;
  if (height * width != dataset.feature_dim) {
    throw ShapeError("augment: height * width != feature_dim");
  }
  constexpr int kMaxShift = 2;
  Rng rng(seed);
  LabeledDataset out;
  out.feature_dim = dataset.feature_dim;
  out.n_classes = dataset.n_classes;
  out.features.reserve(dataset.features.size() * factor);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto x = dataset.sample(i);
    out.push_back(x, dataset.labels[i], dataset.ids[i]);
    for (std::size_t v = 1; v < factor; ++v) {
      const bool mirror = uniform01(rng) < 0.5;
      const int dx = static_cast<int>(uniform_index(rng, 2 * kMaxShift + 1)) - kMaxShift;
      const int dy = static_cast<int>(uniform_index(rng, 2 * kMaxShift + 1)) - kMaxShift;
      auto img = mirror ? mirror_horizontal(x, height, width)
                        : std::vector<double>(x.begin(), x.end());
      img = shift_image(img, height, width, dx, dy);
      out.push_back(img, dataset.labels[i], dataset.ids[i]);
    }
  }
  return out;
}

}  // namespace gatetrain
