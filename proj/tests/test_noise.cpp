#include <map>

#include "doctest.h"
#include "sdd/errors.hpp"
#include "sdd/noise.hpp"
#include "sdd/rng.hpp"

using namespace sdd;

namespace {

Dataset labels_only(std::size_t n, std::size_t k, std::uint64_t seed) {
  Dataset ds;
  ds.input_dim = 1;
  ds.num_classes = k;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels.push_back(static_cast<std::int32_t>(rng.uniform_index(k)));
    ds.features.push_back(0.0f);
  }
  return ds;
}

}  // namespace

TEST_CASE("counts round half away from zero") {
  CHECK(noisy_count(0.5, 5) == 3);
  CHECK(noisy_count(0.2, 7) == 1);
  CHECK(noisy_count(0.3, 5) == 2);
  CHECK(noisy_count(0.0, 100) == 0);
}

TEST_CASE("symmetric noise spreads flips over the other classes") {
  const auto ds = labels_only(20000, 4, 1);
  const auto out = apply_symmetric(ds, 0.5, 2);
  CHECK(out.flipped_count() == 10000);
  std::map<std::pair<int, int>, int> moves;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (out.flipped[i]) ++moves[{out.clean_labels[i], out.dataset.labels[i]}];
  }
  CHECK(moves.size() == 12);  // every off-diagonal pair, never the diagonal
  for (const auto& [pair, count] : moves) {
    CHECK(pair.first != pair.second);
    CHECK(count > 700);
  }
}

TEST_CASE("noise is a pure function of its seed") {
  const auto ds = labels_only(500, 10, 3);
  for (auto kind : {NoiseKind::kSymmetric, NoiseKind::kAsymmetric, NoiseKind::kPairflip}) {
    const NoiseSpec spec{kind, 0.3, 9, kind == NoiseKind::kAsymmetric ? mnist_class_map() : ClassMap{}};
    const auto a = apply_noise(ds, spec);
    const auto b = apply_noise(ds, spec);
    CHECK(a.dataset.labels == b.dataset.labels);
    auto other = spec;
    other.seed = 10;
    CHECK(apply_noise(ds, other).dataset.labels != a.dataset.labels);
  }
}

TEST_CASE("the MNIST map") {
  const auto m = mnist_class_map();
  CHECK(m == ClassMap{{2, 7}, {3, 8}, {5, 6}, {6, 5}});
}

TEST_CASE("pairflip wraps the last class") {
  const auto ds = labels_only(300, 3, 4);
  const auto out = apply_pairflip(ds, 0.4, 5);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (out.clean_labels[i] == 2 && out.flipped[i]) CHECK(out.dataset.labels[i] == 0);
  }
}

TEST_CASE("kNone leaves labels alone") {
  const auto ds = labels_only(50, 3, 1);
  const auto out = apply_noise(ds, {});
  CHECK(out.dataset.labels == ds.labels);
  CHECK(out.flipped_count() == 0);
}

TEST_CASE("invalid noise specs are rejected") {
  const auto ds = labels_only(50, 10, 1);
  CHECK_THROWS_AS(apply_symmetric(ds, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(apply_symmetric(ds, -0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(apply_asymmetric(ds, 0.2, {{1, 1}}, 1), InvalidArgument);
  CHECK_THROWS_AS(apply_asymmetric(ds, 0.2, {{1, 12}}, 1), InvalidArgument);
  CHECK_THROWS_AS(apply_symmetric(labels_only(10, 1, 1), 0.2, 1), InvalidArgument);
  CHECK(parse_noise_kind("pairflip") == NoiseKind::kPairflip);
  CHECK_THROWS(parse_noise_kind("uniform"));
}
