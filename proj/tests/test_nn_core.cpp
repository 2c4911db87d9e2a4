#include <cmath>
#include <limits>

#include "doctest.h"
#include "sdd/data_io.hpp"
#include "sdd/errors.hpp"
#include "sdd/nn_core.hpp"
#include "sdd/rng.hpp"

using namespace sdd;

namespace {

// Plain-loop reference: ReLU hidden layers, masked weights.
std::vector<double> reference_logits(const ParamSet& p, const Mask& mask, std::span<const float> x) {
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const auto& w = p.weight(l);
    const auto& b = p.bias(l);
    const auto* m = mask.find(w.name);
    const auto out = w.shape[0], in = w.shape[1];
    std::vector<double> z(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = b.values[o];
      for (std::size_t i = 0; i < in; ++i) {
        const bool keep = m == nullptr || m->bits[o * in + i];
        if (keep) s += static_cast<double>(w.values[o * in + i]) * a[i];
      }
      z[o] = (l + 1 < p.num_layers()) ? std::max(0.0, s) : s;
    }
    a = std::move(z);
  }
  return a;
}

Mask random_mask(const MlpSpec& spec, std::uint64_t seed) {
  Mask m = Mask::all_ones(spec, default_scope(spec));
  Rng rng(seed);
  for (auto& t : m.tensors()) {
    for (auto& b : t.bits) b = rng.uniform01() < 0.6 ? 1 : 0;
  }
  return m;
}

}  // namespace

TEST_CASE("MlpSpec counts") {
  const auto lenet = MlpSpec::lenet_300_100();
  CHECK(lenet.num_weights() == 784 * 300 + 300 * 100 + 100 * 10);
  CHECK(lenet.num_params() == lenet.num_weights() + 300 + 100 + 10);
  CHECK(weight_name(0) == "fc1.weight");
  CHECK(bias_name(2) == "fc3.bias");
  CHECK_THROWS_AS(MlpSpec{{5}}.validate(), InvalidArgument);
}

TEST_CASE("Kaiming init has the right scale and zero biases") {
  const MlpSpec spec{{400, 300, 10}};
  const auto p = init_params(spec, 1);
  double s2 = 0;
  for (float v : p.weight(0).values) s2 += double{v} * v;
  CHECK(s2 / p.weight(0).size() == doctest::Approx(2.0 / 400).epsilon(0.03));
  for (float v : p.bias(0).values) CHECK(v == 0.0f);
  CHECK(init_params(spec, 1) == p);
  CHECK(!(init_params(spec, 2) == p));
}

TEST_CASE("forward matches the loop reference under a mask") {
  const MlpSpec spec{{5, 7, 6, 4}};
  auto p = init_params(spec, 3);
  Rng rng(4);
  for (auto& t : p.tensors()) {
    for (auto& v : t.values) v += static_cast<float>(0.1 * rng.normal());
  }
  const auto mask = random_mask(spec, 5);
  const auto ds = make_synthetic(9, 5, 4, 2.0, 6);
  const auto logits = forward(p, mask, std::span<const float>(ds.features), ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto ref = reference_logits(p, mask, ds.row(r));
    for (std::size_t c = 0; c < 4; ++c) CHECK(logits(r, c) == doctest::Approx(ref[c]).epsilon(1e-12));
  }
}

TEST_CASE("masked gradients zero the pruned coordinates, raw ones do not") {
  const MlpSpec spec{{4, 6, 3}};
  auto p = init_params(spec, 8).cast<double>();
  const auto mask = random_mask(spec, 9);
  const auto ds = make_synthetic(12, 4, 3, 2.0, 10);
  Batch batch{ds.features, ds.labels, 4};
  const auto g = loss_and_grads(p, mask, batch).grads;
  const auto* m = mask.find("fc1.weight");
  bool raw_nonzero_on_pruned = false;
  for (std::size_t i = 0; i < m->bits.size(); ++i) {
    if (!m->bits[i]) {
      CHECK(g.masked[0][i] == 0.0);
      raw_nonzero_on_pruned = raw_nonzero_on_pruned || g.raw[0][i] != 0.0;
    } else {
      CHECK(g.masked[0][i] == g.raw[0][i]);
    }
  }
  CHECK(raw_nonzero_on_pruned);
}

TEST_CASE("cross-entropy is stable for huge logits") {
  MatrixD logits(2, 3);
  logits << 1e4, 0, -1e4, 0, 0, 1000;
  const std::vector<std::int32_t> labels = {0, 1};
  const auto m = metrics_from_logits(logits, labels);
  CHECK(std::isfinite(m.loss));
  CHECK(m.loss == doctest::Approx(500.0));
  CHECK(m.accuracy == 0.5);
}

TEST_CASE("argmax ties go to the lowest class") {
  MatrixD logits(2, 4);
  logits << 1, 3, 3, 0, 2, 2, 2, 2;
  const auto a = argmax_rows(logits);
  CHECK(a[0] == 1);
  CHECK(a[1] == 0);
}

TEST_CASE("evaluate over chunks matches one pass") {
  const MlpSpec spec{{3, 5, 2}};
  const auto p = init_params(spec, 11);
  const auto ds = make_synthetic(2500, 3, 2, 2.0, 12);
  const auto m = evaluate(p, Mask{}, ds);
  const auto logits = forward(p, Mask{}, std::span<const float>(ds.features), ds.size());
  const auto ref = metrics_from_logits(logits, ds.labels);
  CHECK(m.loss == doctest::Approx(ref.loss).epsilon(1e-12));
  CHECK(m.accuracy == ref.accuracy);
}

TEST_CASE("shape errors name the layer") {
  const MlpSpec spec{{3, 5, 2}};
  const auto p = init_params(spec, 1);
  const auto ds = make_synthetic(4, 4, 2, 2.0, 1);
  try {
    forward(p, Mask{}, std::span<const float>(ds.features), ds.size());
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("layer 1 (fc1.weight)") != std::string::npos);
  }
}

TEST_CASE("non-finite loss raises divergence") {
  const MlpSpec spec{{2, 3, 2}};
  auto p = init_params(spec, 1);
  p.weight(0).values[0] = std::numeric_limits<float>::infinity();
  Batch b{{1.0f, 1.0f}, {0}, 2};
  CHECK_THROWS_AS(loss_and_grads(p, Mask{}, b), Divergence);
}
