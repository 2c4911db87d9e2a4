#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdd/data_io.hpp"
#include "sdd/mask.hpp"
#include "sdd/nn_core.hpp"
#include "sdd/optim.hpp"
#include "sdd/params.hpp"
#include "sdd/retrain.hpp"

namespace sdd {

/// || w_init - w_learned * m ||_2 over all weight tensors (biases excluded).
/// `w_init` is the dense network's original initialization.
double learning_distance(const ParamSet& w_init, const ParamSet& w_learned, const Mask& mask);

struct RedenseResult {
  TrainTrace trace;
  double lr = 0.0;
};

/// Lifts the mask, restarts pruned coordinates at exactly zero and trains the
/// full network for as many epochs as the sparse run took, at a fixed rate
/// equal to the sparse run's last-epoch rate. Other hyperparameters are
/// taken from `config`.
RedenseResult redense_train(const LevelResult& level, const Dataset& train_set, const Dataset& test_set,
                            const TrainConfig& config, std::uint64_t base_seed);

struct InterpPoint {
  double alpha = 0.0;
  Metrics train;
  Metrics test;
};

struct InterpScan {
  std::vector<InterpPoint> points;
};

/// Parameters on the segment (1 - alpha) * a + alpha * b.
ParamSet interpolate(const ParamSet& a, const ParamSet& b, double alpha);

/// Evaluates (1 - alpha) w_s + alpha w_r on the grid 0, step, ..., 1.
/// `threads` > 1 evaluates grid points concurrently; results are identical.
InterpScan interp_scan(const ParamSet& w_sparse, const ParamSet& w_redense, const Dataset& train_set,
                       const Dataset& test_set, double step = 0.01, unsigned threads = 1);

struct LandscapeSlice {
  std::vector<double> offsets;
  std::vector<double> train_loss;
  std::uint64_t direction_seed = 0;
};

/// Gaussian direction with every unit's incoming-weight row rescaled to the
/// norm of the matching row of `center` (zero rows stay zero); bias
/// directions are zero.
ParamSet filter_normalized_direction(const ParamSet& center, std::uint64_t seed);

/// Train loss at center + offset * d for `points` offsets evenly spaced on
/// [-span, span]. `points` must be odd.
LandscapeSlice landscape_slice(const ParamSet& center, const Dataset& train_set, std::uint64_t seed,
                               double span = 1.0, int points = 41, unsigned threads = 1);

enum class Phase { kLight, kCritical, kSweet, kCollapsed };
std::string to_string(Phase p);

struct LevelAccuracy {
  double train_acc = 0.0;
  double test_acc = 0.0;
};

struct PhaseLabeling {
  std::vector<std::optional<Phase>> phases;  // per level
  std::optional<std::size_t> threshold;      // interpolation threshold level
};

/// Level 0 is the dense reference.
PhaseLabeling classify_phases(const std::vector<LevelAccuracy>& levels, double fit_fraction = 0.99,
                              double dip_margin = 0.01);

struct DdSignature {
  std::size_t dip = 0;
  std::size_t peak = 0;
  std::size_t collapse = 0;
  bool operator==(const DdSignature&) const = default;
};

/// Dip, recovery peak and final collapse in test accuracy by level, or
/// nullopt when that ordering is absent.
std::optional<DdSignature> dd_signature(const std::vector<double>& test_acc,
                                        const std::vector<double>& sparsity,
                                        double collapse_margin = 0.05);

}  // namespace sdd
