#include "sdd/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "sdd/errors.hpp"
#include "sdd/rng.hpp"

namespace sdd {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

void Dataset::validate() const {
  if (features.size() != labels.size() * input_dim) {
    throw InvalidArgument("dataset: feature buffer size does not match n * input_dim");
  }
  for (float x : features) {
    if (!std::isfinite(x)) throw InvalidArgument("dataset: non-finite feature");
  }
  for (auto y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InvalidArgument("dataset: label " + std::to_string(y) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
  }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io", "write failed for " + path.string());
}

Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path, std::size_t num_classes) {
  const auto img = read_bytes(images_path);
  const auto lab = read_bytes(labels_path);

  if (img.size() < 16) throw FormatError("truncated", "truncated image header: " + images_path.string());
  if (read_be32(img, 0) != kImageMagic) {
    throw FormatError("bad_magic", "bad magic in image file " + images_path.string());
  }
  if (lab.size() < 8) throw FormatError("truncated", "truncated label header: " + labels_path.string());
  if (read_be32(lab, 0) != kLabelMagic) {
    throw FormatError("bad_magic", "bad magic in label file " + labels_path.string());
  }

  const std::size_t n_img = read_be32(img, 4);
  const std::size_t rows = read_be32(img, 8);
  const std::size_t cols = read_be32(img, 12);
  const std::size_t n_lab = read_be32(lab, 4);
  const std::size_t dim = rows * cols;

  if (img.size() != 16 + n_img * dim) {
    throw FormatError("truncated", "image payload size mismatch in " + images_path.string());
  }
  if (lab.size() != 8 + n_lab) {
    throw FormatError("truncated", "label payload size mismatch in " + labels_path.string());
  }
  if (n_img != n_lab) {
    throw FormatError("count_mismatch", "count mismatch: " + std::to_string(n_img) +
                                            " images vs " + std::to_string(n_lab) + " labels");
  }

  Dataset ds;
  ds.input_dim = dim;
  ds.num_classes = num_classes;
  ds.features.resize(n_img * dim);
  ds.labels.resize(n_img);
  for (std::size_t i = 0; i < n_img * dim; ++i) {
    ds.features[i] = static_cast<float>(img[16 + i]) / 255.0f;
  }
  for (std::size_t i = 0; i < n_lab; ++i) {
    ds.labels[i] = lab[8 + i];
    if (static_cast<std::size_t>(ds.labels[i]) >= num_classes) {
      throw FormatError("bad_label", "label " + std::to_string(ds.labels[i]) + " at index " +
                                         std::to_string(i) + " out of range");
    }
  }
  return ds;
}

std::vector<std::uint8_t> encode_idx_images(const Dataset& ds, std::uint32_t rows,
                                            std::uint32_t cols) {
  if (std::size_t{rows} * cols != ds.input_dim) {
    throw ShapeError("encode_idx_images: rows*cols != input_dim");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + ds.features.size());
  put_be32(out, kImageMagic);
  put_be32(out, static_cast<std::uint32_t>(ds.size()));
  put_be32(out, rows);
  put_be32(out, cols);
  for (float x : ds.features) {
    const float v = std::clamp(std::nearbyint(x * 255.0f), 0.0f, 255.0f);
    out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const Dataset& ds) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + ds.size());
  put_be32(out, kLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(ds.size()));
  for (auto y : ds.labels) out.push_back(static_cast<std::uint8_t>(y));
  return out;
}

Dataset make_synthetic(std::size_t n, std::size_t input_dim, std::size_t num_classes,
                       double separation, std::uint64_t seed) {
  if (num_classes < 1 || input_dim < 1) throw InvalidArgument("make_synthetic: empty shape");
  if (n < num_classes) throw InvalidArgument("make_synthetic: n must be >= K");

  Rng rng(derive_seed(seed, Stream::kSynthetic));

  // Means at separation/sqrt(2) along distinct axes are pairwise `separation`
  // apart. With more classes than axes, fall back to random unit directions
  // scaled the same way.
  const double radius = separation / std::sqrt(2.0);
  std::vector<double> means(num_classes * input_dim, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double* m = means.data() + c * input_dim;
    if (num_classes <= input_dim) {
      m[c] = radius;
    } else {
      double norm = 0.0;
      for (std::size_t j = 0; j < input_dim; ++j) {
        m[j] = rng.normal();
        norm += m[j] * m[j];
      }
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < input_dim; ++j) m[j] *= norm > 0 ? radius / norm : 0.0;
    }
  }

  std::vector<double> raw(n * input_dim);
  Dataset ds;
  ds.input_dim = input_dim;
  ds.num_classes = num_classes;
  ds.labels.resize(n);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = i % num_classes;
    ds.labels[i] = static_cast<std::int32_t>(c);
    for (std::size_t j = 0; j < input_dim; ++j) {
      const double v = means[c * input_dim + j] + rng.normal();
      raw[i * input_dim + j] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double scale = hi > lo ? 1.0 / (hi - lo) : 0.0;
  ds.features.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ds.features[i] = std::clamp(static_cast<float>((raw[i] - lo) * scale), 0.0f, 1.0f);
  }
  return ds;
}

Dataset subset_first(const Dataset& ds, std::size_t k) {
  if (k > ds.size()) {
    throw InvalidArgument("subset of " + std::to_string(k) + " requested from " + std::to_string(ds.size()) +
                          " examples");
  }
  if (k == 0 || k == ds.size()) return ds;
  Dataset out;
  out.input_dim = ds.input_dim;
  out.num_classes = ds.num_classes;
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(k));
  out.features.assign(ds.features.begin(),
                      ds.features.begin() + static_cast<std::ptrdiff_t>(k * ds.input_dim));
  return out;
}

Dataset subset_sample(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  if (k > ds.size()) {
    throw InvalidArgument("subset of " + std::to_string(k) + " requested from " + std::to_string(ds.size()) +
                          " examples");
  }
  if (k == 0 || k == ds.size()) return ds;
  Rng rng(derive_seed(seed, Stream::kSubset));
  auto idx = rng.sample_without_replacement(ds.size(), k);
  std::sort(idx.begin(), idx.end());
  Batch b = gather(ds, idx);
  Dataset out;
  out.input_dim = ds.input_dim;
  out.num_classes = ds.num_classes;
  out.features = std::move(b.features);
  out.labels = std::move(b.labels);
  return out;
}

Batch gather(const Dataset& ds, std::span<const std::size_t> indices) {
  Batch b;
  b.input_dim = ds.input_dim;
  b.features.resize(indices.size() * ds.input_dim);
  b.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = ds.row(indices[r]);
    std::copy(src.begin(), src.end(), b.features.begin() + static_cast<std::ptrdiff_t>(r * ds.input_dim));
    b.labels[r] = ds.labels[indices[r]];
  }
  return b;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  out.reserve((n + batch_size - 1) / batch_size);
  for (std::size_t start = 0; start < n; start += batch_size) {
    const auto end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t seed) {
  std::vector<Batch> out;
  for (const auto& idx : batch_indices(ds.size(), batch_size, seed)) {
    out.push_back(gather(ds, idx));
  }
  return out;
}

}  // namespace sdd
