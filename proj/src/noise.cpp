#include "sdd/noise.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/errors.hpp"
#include "sdd/rng.hpp"

namespace sdd {

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kNone: return "none";
    case NoiseKind::kSymmetric: return "symmetric";
    case NoiseKind::kAsymmetric: return "asymmetric";
    case NoiseKind::kPairflip: return "pairflip";
  }
  return "?";
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::kNone;
  if (s == "symmetric") return NoiseKind::kSymmetric;
  if (s == "asymmetric") return NoiseKind::kAsymmetric;
  if (s == "pairflip") return NoiseKind::kPairflip;
  throw ConfigError("unknown noise kind '" + s + "'");
}

ClassMap mnist_class_map() { return {{2, 7}, {3, 8}, {5, 6}, {6, 5}}; }

void NoiseSpec::validate(std::size_t num_classes) const {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("noise rate must be in [0, 1)");
  if (kind != NoiseKind::kNone && kind != NoiseKind::kAsymmetric && num_classes < 2) {
    throw InvalidArgument("label noise needs at least 2 classes");
  }
  if (kind == NoiseKind::kAsymmetric) {
    const auto k = static_cast<int>(num_classes);
    for (const auto& [src, dst] : class_map) {
      if (src < 0 || src >= k || dst < 0 || dst >= k) {
        throw InvalidArgument("class map entry " + std::to_string(src) + "->" + std::to_string(dst) +
                              " outside [0, K)");
      }
      if (src == dst) throw InvalidArgument("class map has fixed point " + std::to_string(src));
    }
  }
}

std::size_t NoisyDataset::flipped_count() const {
  return static_cast<std::size_t>(std::count(flipped.begin(), flipped.end(), 1));
}

std::size_t noisy_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
}

namespace {

NoisyDataset start(const Dataset& ds) {
  NoisyDataset out;
  out.dataset = ds;
  out.clean_labels = ds.labels;
  out.flipped.assign(ds.size(), 0);
  return out;
}

std::vector<std::vector<std::size_t>> members_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> members(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) members[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  return members;
}

// Relabels round(rate * |members|) of `members` (chosen without replacement)
// to `target`.
void flip_within(NoisyDataset& out, const std::vector<std::size_t>& members, double rate,
                 std::int32_t target, Rng& rng) {
  const auto k = noisy_count(rate, members.size());
  for (auto pick : rng.sample_without_replacement(members.size(), k)) {
    const auto i = members[pick];
    out.dataset.labels[i] = target;
    out.flipped[i] = 1;
  }
}

}  // namespace

NoisyDataset apply_symmetric(const Dataset& ds, double rate, std::uint64_t seed) {
  NoiseSpec{NoiseKind::kSymmetric, rate, seed, {}}.validate(ds.num_classes);
  NoisyDataset out = start(ds);
  Rng rng(derive_seed(seed, Stream::kNoise, 0));
  const auto k = noisy_count(rate, ds.size());
  const auto others = static_cast<std::uint64_t>(ds.num_classes - 1);
  for (auto i : rng.sample_without_replacement(ds.size(), k)) {
    const auto clean = ds.labels[i];
    auto r = static_cast<std::int32_t>(rng.uniform_index(others));
    if (r >= clean) ++r;
    out.dataset.labels[i] = r;
    out.flipped[i] = 1;
  }
  return out;
}

NoisyDataset apply_asymmetric(const Dataset& ds, double rate, const ClassMap& class_map,
                              std::uint64_t seed) {
  NoiseSpec{NoiseKind::kAsymmetric, rate, seed, class_map}.validate(ds.num_classes);
  NoisyDataset out = start(ds);
  const auto members = members_by_class(ds);
  for (const auto& [src, dst] : class_map) {
    Rng rng(derive_seed(seed, Stream::kNoise, 1000 + static_cast<std::uint64_t>(src)));
    flip_within(out, members[static_cast<std::size_t>(src)], rate, dst, rng);
  }
  return out;
}

NoisyDataset apply_pairflip(const Dataset& ds, double rate, std::uint64_t seed) {
  NoiseSpec{NoiseKind::kPairflip, rate, seed, {}}.validate(ds.num_classes);
  NoisyDataset out = start(ds);
  const auto members = members_by_class(ds);
  const auto k = static_cast<std::int32_t>(ds.num_classes);
  for (std::int32_t c = 0; c < k; ++c) {
    Rng rng(derive_seed(seed, Stream::kNoise, 2000 + static_cast<std::uint64_t>(c)));
    flip_within(out, members[static_cast<std::size_t>(c)], rate, (c + 1) % k, rng);
  }
  return out;
}

NoisyDataset apply_noise(const Dataset& ds, const NoiseSpec& spec) {
  switch (spec.kind) {
    case NoiseKind::kNone: return start(ds);
    case NoiseKind::kSymmetric: return apply_symmetric(ds, spec.rate, spec.seed);
    case NoiseKind::kAsymmetric: return apply_asymmetric(ds, spec.rate, spec.class_map, spec.seed);
    case NoiseKind::kPairflip: return apply_pairflip(ds, spec.rate, spec.seed);
  }
  throw InvalidArgument("unknown noise kind");
}

}  // namespace sdd
