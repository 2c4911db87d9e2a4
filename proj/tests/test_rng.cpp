#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "sdd/errors.hpp"
#include "sdd/rng.hpp"

using namespace sdd;

TEST_CASE("splitmix64 matches the reference generator") {
  // First output of the reference splitmix64 stream seeded with 0.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
}

TEST_CASE("engine is the standard mt19937_64") {
  Rng rng(5489);
  for (int i = 0; i < 9999; ++i) rng.next_u64();
  CHECK(rng.next_u64() == 9981545732273789042ULL);
}

TEST_CASE("derived seeds separate streams and indices") {
  std::set<std::uint64_t> seen;
  for (auto s : {Stream::kInit, Stream::kShuffle, Stream::kNoise, Stream::kEpoch}) {
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(1, s, i));
  }
  CHECK(seen.size() == 200);
  CHECK(derive_seed(1, Stream::kInit, 3) == derive_seed(1, Stream::kInit, 3));
  CHECK(derive_seed(1, Stream::kInit, 3) != derive_seed(2, Stream::kInit, 3));
}

TEST_CASE("uniform01 stays in [0, 1) with mean near one half") {
  Rng rng(1);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform_index is unbiased over a small range") {
  Rng rng(2);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) CHECK(std::abs(c - n / 7) < 400);
  CHECK_THROWS_AS(rng.uniform_index(0), InvalidArgument);
}

TEST_CASE("normal draws have unit variance") {
  Rng rng(3);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sample_without_replacement returns distinct in-range indices") {
  Rng rng(4);
  const auto idx = rng.sample_without_replacement(100, 30);
  CHECK(idx.size() == 30);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 30);
  CHECK(*std::max_element(idx.begin(), idx.end()) < 100);
  CHECK(rng.sample_without_replacement(5, 5).size() == 5);
  CHECK_THROWS_AS(rng.sample_without_replacement(3, 4), InvalidArgument);
}

TEST_CASE("shuffle is a permutation and reproducible") {
  std::vector<int> a(50), b;
  for (int i = 0; i < 50; ++i) a[i] = i;
  b = a;
  Rng r1(9), r2(9);
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  std::sort(b.begin(), b.end());
  for (int i = 0; i < 50; ++i) CHECK(b[i] == i);
}
