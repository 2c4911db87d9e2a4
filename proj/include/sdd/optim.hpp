#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sdd/data_io.hpp"
#include "sdd/mask.hpp"
#include "sdd/nn_core.hpp"
#include "sdd/params.hpp"

namespace sdd {

/// Step schedule: base_lr * drop_factor^(number of drop epochs <= epoch).
/// When `fixed` is set the schedule is that constant.
struct LrSchedule {
  double base_lr = 0.1;
  std::vector<int> drop_epochs;
  double drop_factor = 1.0;
  std::optional<double> fixed;

  static LrSchedule constant(double lr) { return {lr, {}, 1.0, lr}; }
  void validate() const;
  bool operator==(const LrSchedule&) const = default;
};

double lr_at(const LrSchedule& schedule, int epoch);

struct SgdHyper {
  double lr = 0.1;
  double momentum = 0.0;
  double weight_decay = 0.0;  // weights only
};

struct SgdState {
  std::vector<std::vector<double>> velocity;
  static SgdState zeros(const ParamSet& params);
};

/// g = masked_grad + wd * w (weights), v = momentum * v + g, w -= lr * v,
/// then the mask is re-applied. Throws Divergence on a non-finite update.
void sgd_step(ParamSet& params, const Gradients& grads, SgdState& state, const SgdHyper& hyper,
              const Mask& mask);

/// Hyperparameters of one training run. `rewind_step` is an optimizer-step
/// index; the weights after that many steps are captured.
struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 128;
  double momentum = 0.0;
  double weight_decay = 0.0;
  LrSchedule schedule = LrSchedule::constant(0.1);
  std::uint64_t seed = 0;
  std::size_t rewind_step = 0;

  void validate(std::size_t train_size) const;
};

std::size_t steps_per_epoch(std::size_t n, std::size_t batch_size);

/// Which schedule epochs to run: [first_epoch, first_epoch + num_epochs).
/// Optimizer steps are counted from first_epoch * steps_per_epoch.
struct TrainWindow {
  int first_epoch = 0;
  int num_epochs = 0;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  Metrics train;
  Metrics test;
};

struct TrainTrace {
  Metrics initial_train;  // before the first step
  Metrics initial_test;
  std::vector<EpochRecord> epochs;
  ParamSet final_params;
  std::optional<ParamSet> rewind_checkpoint;
  std::size_t steps = 0;
  int best_test_epoch = -1;
  double best_test_acc = 0.0;
};

/// Called after every optimizer step with the global step index (1-based).
using StepObserver = std::function<void(std::size_t step, const ParamSet& params)>;

/// Thrown when training hits a non-finite loss or update; carries the trace
/// up to the failing epoch.
class TrainingDiverged : public Divergence {
 public:
  TrainingDiverged(const std::string& m, TrainTrace partial)
      : Divergence(m), partial_(std::move(partial)) {}
  const TrainTrace& partial() const { return partial_; }

 private:
  TrainTrace partial_;
};

/// Mini-batch SGD over per-epoch shuffles seeded by (config.seed, epoch).
/// Records full-dataset train/test metrics after every epoch.
TrainTrace train(ParamSet params, const Mask& mask, const Dataset& train_set,
                 const Dataset& test_set, const TrainConfig& config,
                 std::optional<TrainWindow> window = std::nullopt,
                 const StepObserver& observer = {});

}  // namespace sdd
