#include "sdd/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/parallel.hpp"
#include "sdd/rng.hpp"

namespace sdd {

double learning_distance(const ParamSet& w_init, const ParamSet& w_learned, const Mask& mask) {
  if (!(w_init.spec() == w_learned.spec())) {
    throw ShapeError("learning_distance: parameter sets have different shapes");
  }
  double sum = 0.0;
  for (std::size_t l = 0; l < w_init.num_layers(); ++l) {
    const auto& a = w_init.weight(l);
    const auto& b = w_learned.weight(l);
    const MaskTensor* m = mask.find(a.name);
    if (m != nullptr && m->bits.size() != a.values.size()) {
      throw ShapeError("learning_distance: mask for '" + a.name + "' has the wrong size");
    }
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      const double learned = (m != nullptr && !m->bits[i]) ? 0.0 : static_cast<double>(b.values[i]);
      const double d = static_cast<double>(a.values[i]) - learned;
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

RedenseResult redense_train(const LevelResult& level, const Dataset& train_set, const Dataset& test_set,
                            const TrainConfig& config, std::uint64_t base_seed) {
  RedenseResult out;
  const auto& sparse = level.trace;
  const int epochs = static_cast<int>(sparse.epochs.size());
  out.lr = sparse.epochs.empty() ? lr_at(config.schedule, 0) : sparse.epochs.back().lr;

  ParamSet start = sparse.final_params;
  apply_mask(start, level.mask);  // recovered coordinates start at exactly zero

  TrainConfig cfg = config;
  cfg.epochs = epochs;
  cfg.schedule = LrSchedule::constant(out.lr);
  cfg.seed = derive_seed(base_seed, Stream::kRedense, level.level);
  cfg.rewind_step = 0;
  out.trace = train(std::move(start), Mask{}, train_set, test_set, cfg, TrainWindow{0, epochs});
  out.trace.rewind_checkpoint.reset();
  return out;
}

ParamSet interpolate(const ParamSet& a, const ParamSet& b, double alpha) {
  if (!(a.spec() == b.spec())) throw ShapeError("interpolate: parameter sets have different shapes");
  ParamSet out = a;
  const double beta = 1.0 - alpha;
  for (std::size_t t = 0; t < out.tensors().size(); ++t) {
    auto& dst = out.tensors()[t].values;
    const auto& vb = b.tensors()[t].values;
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = static_cast<float>(beta * static_cast<double>(dst[i]) + alpha * static_cast<double>(vb[i]));
    }
  }
  return out;
}

InterpScan interp_scan(const ParamSet& w_sparse, const ParamSet& w_redense, const Dataset& train_set,
                       const Dataset& test_set, double step, unsigned threads) {
  if (!(step > 0.0 && step <= 1.0)) throw InvalidArgument("interpolation step must be in (0, 1]");
  const auto intervals = static_cast<std::size_t>(std::llround(1.0 / step));
  InterpScan scan;
  scan.points.resize(intervals + 1);
  const Mask dense;
  parallel_for(intervals + 1, threads, [&](std::size_t i) {
    const double alpha = static_cast<double>(i) / static_cast<double>(intervals);
    const ParamSet w = interpolate(w_sparse, w_redense, alpha);
    scan.points[i] = {alpha, evaluate(w, dense, train_set), evaluate(w, dense, test_set)};
  });
  return scan;
}

ParamSet filter_normalized_direction(const ParamSet& center, std::uint64_t seed) {
  Rng rng(derive_seed(seed, Stream::kSlice));
  ParamSet d(center.spec());
  for (std::size_t l = 0; l < center.num_layers(); ++l) {
    const auto& w = center.weight(l);
    auto& dw = d.weight(l).values;
    const auto rows = w.shape[0];
    const auto cols = w.shape[1];
    for (auto& x : dw) x = static_cast<float>(rng.normal());
    for (std::size_t r = 0; r < rows; ++r) {
      double wn = 0.0;
      double dn = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double wv = w.values[r * cols + c];
        const double dv = dw[r * cols + c];
        wn += wv * wv;
        dn += dv * dv;
      }
      wn = std::sqrt(wn);
      dn = std::sqrt(dn);
      const double scale = (wn > 0.0 && dn > 0.0) ? wn / dn : 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        dw[r * cols + c] = static_cast<float>(scale * static_cast<double>(dw[r * cols + c]));
      }
    }
  }
  return d;
}

LandscapeSlice landscape_slice(const ParamSet& center, const Dataset& train_set, std::uint64_t seed,
                               double span, int points, unsigned threads) {
  if (points < 1 || points % 2 == 0) throw InvalidArgument("slice needs an odd number of points");
  const ParamSet dir = filter_normalized_direction(center, seed);
  LandscapeSlice slice;
  slice.direction_seed = seed;
  slice.offsets.resize(static_cast<std::size_t>(points));
  slice.train_loss.resize(static_cast<std::size_t>(points));
  const int half = (points - 1) / 2;
  const Mask dense;
  parallel_for(static_cast<std::size_t>(points), threads, [&](std::size_t i) {
    const double offset = half == 0 ? 0.0 : span * static_cast<double>(static_cast<int>(i) - half) / half;
    ParamSet w = center;
    for (std::size_t t = 0; t < w.tensors().size(); ++t) {
      auto& v = w.tensors()[t].values;
      const auto& dv = dir.tensors()[t].values;
      for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = static_cast<float>(static_cast<double>(v[j]) + offset * static_cast<double>(dv[j]));
      }
    }
    slice.offsets[i] = offset;
    slice.train_loss[i] = evaluate(w, dense, train_set).loss;
  });
  return slice;
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::kLight: return "light";
    case Phase::kCritical: return "critical";
    case Phase::kSweet: return "sweet";
    case Phase::kCollapsed: return "collapsed";
  }
  return "?";
}

PhaseLabeling classify_phases(const std::vector<LevelAccuracy>& levels, double fit_fraction,
                              double dip_margin) {
  if (levels.size() < 3) throw InvalidArgument("classify_phases needs at least 3 levels");
  const auto n = levels.size();
  const double dense_train = levels[0].train_acc;
  const double dense_test = levels[0].test_acc;
  const double fit_bar = fit_fraction * dense_train;
  const double low_bar = dense_test - dip_margin;
  const double high_bar = dense_test + dip_margin;

  PhaseLabeling out;
  out.phases.assign(n, std::nullopt);
  for (std::size_t l = 1; l < n; ++l) {
    if (levels[l].train_acc < fit_bar) {
      out.threshold = l;
      break;
    }
  }

  const std::size_t light_end = out.threshold.value_or(n);
  if (!out.threshold) {
    for (std::size_t l = 0; l < light_end; ++l) {
      if (levels[l].test_acc >= low_bar) out.phases[l] = Phase::kLight;
    }
    return out;
  }

  // Critical: the threshold plus its contiguous neighbours below the dense
  // test accuracy.
  const std::size_t thr = *out.threshold;
  std::size_t crit_begin = thr;
  while (crit_begin > 1 && levels[crit_begin - 1].test_acc < low_bar) --crit_begin;
  std::size_t crit_end = thr;  // inclusive
  while (crit_end + 1 < n && levels[crit_end + 1].test_acc < low_bar) ++crit_end;

  for (std::size_t l = 0; l < crit_begin; ++l) {
    if (levels[l].test_acc >= low_bar) out.phases[l] = Phase::kLight;
  }
  for (std::size_t l = crit_begin; l <= crit_end; ++l) out.phases[l] = Phase::kCritical;

  if (crit_end + 1 < n) {
    std::size_t peak = crit_end + 1;
    for (std::size_t l = crit_end + 1; l < n; ++l) {
      if (levels[l].test_acc > levels[peak].test_acc) peak = l;
    }
    for (std::size_t l = crit_end + 1; l <= peak; ++l) {
      if (levels[l].test_acc > high_bar) out.phases[l] = Phase::kSweet;
    }
    for (std::size_t l = peak + 1; l < n; ++l) {
      if (levels[l].test_acc < low_bar && levels[l].train_acc < fit_bar) out.phases[l] = Phase::kCollapsed;
    }
  }

  // Phases must be nondecreasing along the sweep; drop any label that would
  // step backwards.
  int highest = -1;
  for (auto& p : out.phases) {
    if (!p) continue;
    const int rank = static_cast<int>(*p);
    if (rank < highest) {
      p.reset();
    } else {
      highest = rank;
    }
  }
  return out;
}

std::optional<DdSignature> dd_signature(const std::vector<double>& test_acc,
                                        const std::vector<double>& sparsity, double collapse_margin) {
  const auto n = test_acc.size();
  if (n < 5 || (!sparsity.empty() && sparsity.size() != n)) return std::nullopt;

  auto argmax = [&](std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (test_acc[i] > test_acc[best]) best = i;
    }
    return best;
  };
  auto argmin = [&](std::size_t lo, std::size_t hi) {
    std::size_t best = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (test_acc[i] < test_acc[best]) best = i;
    }
    return best;
  };

  const std::size_t top = argmax(1, n);
  if (top == 0) return std::nullopt;
  const std::size_t dip = argmin(0, top);
  if (dip == 0 || !(test_acc[dip] < test_acc[0])) return std::nullopt;
  const std::size_t peak = argmax(dip + 1, n);
  if (!(test_acc[peak] > test_acc[dip]) || peak + 1 >= n) return std::nullopt;
  const std::size_t last = n - 1;
  if (!(test_acc[last] < test_acc[peak] - collapse_margin)) return std::nullopt;
  return DdSignature{dip, peak, last};
}

}  // namespace sdd
