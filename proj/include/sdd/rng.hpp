#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace sdd {

/// Independent random streams. Every random draw in the library is keyed by
/// (base seed, stream, index) so results never depend on call order across
/// subsystems or on thread scheduling.
enum class Stream : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kNoise = 3,
  kPruneBatch = 4,
  kPruneRandom = 5,
  kRedense = 6,
  kSlice = 7,
  kSubset = 8,
  kSynthetic = 9,
  kEpoch = 10,
};

std::uint64_t splitmix64(std::uint64_t x);

/// seed' = splitmix64(splitmix64(base ^ splitmix64(stream)) + index)
std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index = 0);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// mt19937_64 engine with portable distributions (the std:: distributions are
/// implementation-defined, these are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform integer on [0, n), unbiased. n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// k distinct indices from [0, n), in selection order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace sdd
