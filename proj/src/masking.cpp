#include "sdd/masking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdd/nn_core.hpp"

namespace sdd {

PrunableScope default_scope(const MlpSpec& spec) {
  PrunableScope scope;
  for (std::size_t l = 0; l + 1 < spec.num_layers(); ++l) scope.push_back(weight_name(l));
  std::sort(scope.begin(), scope.end());
  return scope;
}

Mask Mask::all_ones(const MlpSpec& spec, const PrunableScope& scope) {
  Mask m;
  for (const auto& name : scope) {
    bool found = false;
    for (std::size_t l = 0; l < spec.num_layers(); ++l) {
      if (weight_name(l) != name) continue;
      const auto out = spec.layer_sizes[l + 1];
      const auto in = spec.layer_sizes[l];
      m.set({name, {out, in}, std::vector<std::uint8_t>(out * in, 1)});
      found = true;
    }
    if (!found) throw InvalidArgument("prunable scope names unknown weight tensor '" + name + "'");
  }
  return m;
}

const MaskTensor* Mask::find(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

MaskTensor* Mask::find(std::string_view name) {
  for (auto& t : tensors_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void Mask::set(MaskTensor t) {
  for (auto b : t.bits) {
    if (b > 1) throw InvalidArgument("mask '" + t.name + "' has a non-binary entry");
  }
  auto it = std::lower_bound(tensors_.begin(), tensors_.end(), t.name,
                             [](const MaskTensor& a, const std::string& n) { return a.name < n; });
  if (it != tensors_.end() && it->name == t.name) {
    *it = std::move(t);
  } else {
    tensors_.insert(it, std::move(t));
  }
}

std::size_t Mask::surviving() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(std::count(t.bits.begin(), t.bits.end(), 1));
  return n;
}

std::size_t Mask::total() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.bits.size();
  return n;
}

PrunableScope Mask::scope() const {
  PrunableScope s;
  for (const auto& t : tensors_) s.push_back(t.name);
  return s;
}

std::string to_string(PruneStrategy s) {
  switch (s) {
    case PruneStrategy::kMagnitude: return "magnitude";
    case PruneStrategy::kGradient: return "gradient";
    case PruneStrategy::kRandom: return "random";
  }
  return "?";
}

PruneStrategy parse_prune_strategy(const std::string& s) {
  if (s == "magnitude") return PruneStrategy::kMagnitude;
  if (s == "gradient") return PruneStrategy::kGradient;
  if (s == "random") return PruneStrategy::kRandom;
  throw ConfigError("unknown pruning strategy '" + s + "'");
}

Sparsity sparsity(const Mask& mask, const MlpSpec& spec) {
  Sparsity s;
  s.surviving = mask.surviving();
  const auto prunable = mask.total();
  const auto pruned = prunable - s.surviving;
  s.prunable = prunable == 0 ? 0.0 : static_cast<double>(pruned) / static_cast<double>(prunable);
  s.total = static_cast<double>(pruned) / static_cast<double>(spec.num_params());
  return s;
}

ScoreSet compute_scores(PruneStrategy strategy, const ParamSet& params, const Mask& mask,
                        const Batch* batch, Rng* rng) {
  if (strategy == PruneStrategy::kGradient && batch == nullptr) {
    throw InvalidArgument("gradient pruning requires a batch");
  }
  if (strategy == PruneStrategy::kRandom && rng == nullptr) {
    throw InvalidArgument("random pruning requires an rng stream");
  }

  Gradients grads;
  if (strategy == PruneStrategy::kGradient) grads = loss_and_grads(params, mask, *batch).grads;

  constexpr double kPruned = -std::numeric_limits<double>::infinity();
  ScoreSet scores;
  for (const auto& m : mask.tensors()) {
    std::size_t ti = 0;
    const auto tensors = params.tensors();
    while (ti < tensors.size() && tensors[ti].name != m.name) ++ti;
    if (ti == tensors.size() || tensors[ti].values.size() != m.bits.size()) {
      throw ShapeError("mask tensor '" + m.name + "' does not match parameters");
    }
    const auto& w = tensors[ti].values;
    ScoreTensor st{m.name, std::vector<double>(w.size())};
    for (std::size_t i = 0; i < w.size(); ++i) {
      double v = 0.0;
      switch (strategy) {
        case PruneStrategy::kMagnitude: v = std::abs(static_cast<double>(w[i])); break;
        case PruneStrategy::kGradient: v = std::abs(grads.raw[ti][i] * static_cast<double>(w[i])); break;
        // Drawn for every coordinate so the stream position does not depend on the mask.
        case PruneStrategy::kRandom: v = rng->uniform01(); break;
      }
      st.values[i] = m.bits[i] ? v : kPruned;
    }
    scores.push_back(std::move(st));
  }
  return scores;
}

std::size_t removal_count(double fraction, std::size_t surviving) {
  const double exact = fraction * static_cast<double>(surviving);
  return static_cast<std::size_t>(std::floor(exact + 1e-9 * std::max(1.0, exact)));
}

Mask prune_global(const Mask& mask, const ScoreSet& scores, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("prune fraction must be in (0, 1)");
  const auto surviving = mask.surviving();
  if (surviving == 0) throw MaskExhausted("mask exhausted: no surviving prunable weights");
  const auto k = removal_count(fraction, surviving);
  if (k == 0) {
    throw MaskExhausted("mask exhausted: " + std::to_string(surviving) +
                        " surviving weights, fraction removes none");
  }

  // Mask tensors are name-sorted, so (tensor position, index) order is
  // (name, index) order.
  struct Candidate {
    double score;
    std::uint32_t tensor;
    std::size_t index;
  };
  std::vector<Candidate> pool;
  pool.reserve(surviving);
  const auto& mt = mask.tensors();
  for (std::size_t t = 0; t < mt.size(); ++t) {
    const ScoreTensor* st = nullptr;
    for (const auto& s : scores) {
      if (s.name == mt[t].name) st = &s;
    }
    if (st == nullptr || st->values.size() != mt[t].bits.size()) {
      throw ShapeError("scores missing or misshaped for '" + mt[t].name + "'");
    }
    for (std::size_t i = 0; i < mt[t].bits.size(); ++i) {
      if (!mt[t].bits[i]) continue;
      if (!std::isfinite(st->values[i])) {
        throw InvalidArgument("non-finite score at surviving coordinate of '" + mt[t].name + "'");
      }
      pool.push_back({st->values[i], static_cast<std::uint32_t>(t), i});
    }
  }

  auto less = [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.tensor != b.tensor) return a.tensor < b.tensor;
    return a.index < b.index;
  };
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1), pool.end(), less);

  Mask out = mask;
  for (std::size_t i = 0; i < k; ++i) {
    out.tensors()[pool[i].tensor].bits[pool[i].index] = 0;
  }
  return out;
}

}  // namespace sdd
