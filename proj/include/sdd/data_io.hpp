#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sdd {

/// Row-major n x input_dim features in [0, 1] with integer labels in [0, K).
struct Dataset {
  std::vector<float> features;
  std::vector<std::int32_t> labels;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::span<const float> row(std::size_t i) const {
    return {features.data() + i * input_dim, input_dim};
  }
  /// Throws InvalidArgument on non-finite features, out-of-range labels or
  /// inconsistent sizes.
  void validate() const;
};

struct Batch {
  std::vector<float> features;  // batch_size x input_dim
  std::vector<std::int32_t> labels;
  std::size_t input_dim = 0;

  std::size_t size() const { return labels.size(); }
};

/// Parses an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled by 1/255 and each image is flattened row-major.
Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path,
                   std::size_t num_classes = 10);

/// IDX encoders used by the round-trip tests and fixtures. Features are
/// mapped back with round(x * 255).
std::vector<std::uint8_t> encode_idx_images(const Dataset& ds, std::uint32_t rows,
                                            std::uint32_t cols);
std::vector<std::uint8_t> encode_idx_labels(const Dataset& ds);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// K Gaussian blobs (unit variance) whose means are pairwise `separation`
/// apart, affinely rescaled into [0, 1]. Labels cycle 0..K-1 so class counts
/// differ by at most one.
Dataset make_synthetic(std::size_t n, std::size_t input_dim, std::size_t num_classes,
                       double separation, std::uint64_t seed);

/// k == 0 keeps everything; asking for more than there is throws.
Dataset subset_first(const Dataset& ds, std::size_t k);
/// k examples drawn without replacement, kept in ascending index order.
Dataset subset_sample(const Dataset& ds, std::size_t k, std::uint64_t seed);

Batch gather(const Dataset& ds, std::span<const std::size_t> indices);

/// Seeded shuffle of 0..n-1 cut into contiguous chunks of batch_size; the
/// final partial chunk is kept.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed);
std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t seed);

}  // namespace sdd
