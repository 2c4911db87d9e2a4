#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdd/data_io.hpp"
#include "sdd/mask.hpp"
#include "sdd/params.hpp"
#include "sdd/rng.hpp"

namespace sdd {

enum class PruneStrategy { kMagnitude, kGradient, kRandom };

std::string to_string(PruneStrategy s);
PruneStrategy parse_prune_strategy(const std::string& s);

struct Sparsity {
  double prunable = 0.0;  // over prunable weights only
  double total = 0.0;     // over every parameter, biases and unpruned layers surviving
  std::size_t surviving = 0;
  bool operator==(const Sparsity&) const = default;
};

Sparsity sparsity(const Mask& mask, const MlpSpec& spec);

/// Per-prunable-tensor scores, same layout as the mask. Already-pruned
/// coordinates hold -infinity.
struct ScoreTensor {
  std::string name;
  std::vector<double> values;
};
using ScoreSet = std::vector<ScoreTensor>;

/// magnitude: |w|; gradient: |dL/dw * w| on `batch` (raw gradients);
/// random: U(0,1) from `rng`. Throws InvalidArgument when the strategy's
/// input is missing.
ScoreSet compute_scores(PruneStrategy strategy, const ParamSet& params, const Mask& mask,
                        const Batch* batch = nullptr, Rng* rng = nullptr);

/// floor(fraction * surviving), guarded against representation error.
std::size_t removal_count(double fraction, std::size_t surviving);

/// Removes the removal_count(fraction, surviving) lowest-scored surviving
/// coordinates pooled across all tensors. Ties break by ascending
/// (tensor name, flat index). The result is nested in `mask`.
Mask prune_global(const Mask& mask, const ScoreSet& scores, double fraction);

}  // namespace sdd
