#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdd/data_io.hpp"

namespace sdd {

enum class NoiseKind { kNone, kSymmetric, kAsymmetric, kPairflip };

std::string to_string(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& s);

/// source class -> target class. A swap is two entries (5->6, 6->5).
using ClassMap = std::map<int, int>;

/// 2->7, 3->8, 5<->6.
ClassMap mnist_class_map();

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kNone;
  double rate = 0.0;  // in [0, 1)
  std::uint64_t seed = 0;
  ClassMap class_map;  // asymmetric only

  void validate(std::size_t num_classes) const;
};

/// Corrupted labels alongside the originals. `dataset.labels` holds the noisy
/// labels that training sees.
struct NoisyDataset {
  Dataset dataset;
  std::vector<std::int32_t> clean_labels;
  std::vector<std::uint8_t> flipped;

  std::size_t flipped_count() const;
};

/// round(rate * n) indices chosen without replacement, each moved uniformly to
/// one of the K-1 other classes.
NoisyDataset apply_symmetric(const Dataset& ds, double rate, std::uint64_t seed);

/// Per source class c in the map, round(rate * count(c)) of its examples move
/// to map[c]; other classes are untouched.
NoisyDataset apply_asymmetric(const Dataset& ds, double rate, const ClassMap& class_map,
                              std::uint64_t seed);

/// Per class c, round(rate * count(c)) examples move to (c + 1) mod K.
NoisyDataset apply_pairflip(const Dataset& ds, double rate, std::uint64_t seed);

NoisyDataset apply_noise(const Dataset& ds, const NoiseSpec& spec);

/// round-half-away-from-zero count used by every kind.
std::size_t noisy_count(double rate, std::size_t n);

}  // namespace sdd
