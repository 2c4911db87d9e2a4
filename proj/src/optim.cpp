#include "sdd/optim.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/rng.hpp"

namespace sdd {

void LrSchedule::validate() const {
  if (fixed) {
    if (!(*fixed > 0.0)) throw InvalidArgument("fixed learning rate must be > 0");
    return;
  }
  if (!(base_lr > 0.0)) throw InvalidArgument("base learning rate must be > 0");
  if (!(drop_factor > 0.0 && drop_factor <= 1.0)) throw InvalidArgument("drop factor must be in (0, 1]");
  for (std::size_t i = 1; i < drop_epochs.size(); ++i) {
    if (drop_epochs[i] <= drop_epochs[i - 1]) throw InvalidArgument("drop epochs must be strictly increasing");
  }
}

double lr_at(const LrSchedule& schedule, int epoch) {
  if (epoch < 0) throw InvalidArgument("lr_at: negative epoch");
  if (schedule.fixed) return *schedule.fixed;
  double lr = schedule.base_lr;
  for (int d : schedule.drop_epochs) {
    if (d <= epoch) lr *= schedule.drop_factor;
  }
  return lr;
}

SgdState SgdState::zeros(const ParamSet& params) {
  SgdState s;
  for (const auto& t : params.tensors()) s.velocity.emplace_back(t.values.size(), 0.0);
  return s;
}

void sgd_step(ParamSet& params, const Gradients& grads, SgdState& state, const SgdHyper& hyper,
              const Mask& mask) {
  auto tensors = params.tensors();
  if (grads.masked.size() != tensors.size() || state.velocity.size() != tensors.size()) {
    throw ShapeError("sgd_step: gradient/state tensor count does not match parameters");
  }
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    auto& w = tensors[ti].values;
    const auto& g = grads.masked[ti];
    auto& v = state.velocity[ti];
    if (g.size() != w.size() || v.size() != w.size()) {
      throw ShapeError("sgd_step: shape mismatch at '" + tensors[ti].name + "'");
    }
    const double wd = ParamSet::is_weight_index(ti) ? hyper.weight_decay : 0.0;
    const MaskTensor* m = mask.find(tensors[ti].name);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double wi = static_cast<double>(w[i]);
      const double gi = g[i] + wd * wi;
      v[i] = hyper.momentum * v[i] + gi;
      const double updated = wi - hyper.lr * v[i];
      if (!std::isfinite(updated)) {
        throw Divergence("non-finite update at '" + tensors[ti].name + "'[" + std::to_string(i) + "]");
      }
      w[i] = (m != nullptr && !m->bits[i]) ? 0.0f : static_cast<float>(updated);
    }
  }
}

void TrainConfig::validate(std::size_t train_size) const {
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  if (momentum < 0.0 || weight_decay < 0.0) throw InvalidArgument("momentum and weight decay must be >= 0");
  schedule.validate();
  const auto max_step = static_cast<std::size_t>(epochs) * steps_per_epoch(train_size, batch_size);
  if (rewind_step > max_step) {
    throw InvalidArgument("rewind step " + std::to_string(rewind_step) + " exceeds " +
                          std::to_string(max_step) + " total steps");
  }
}

std::size_t steps_per_epoch(std::size_t n, std::size_t batch_size) {
  return (n + batch_size - 1) / batch_size;
}

TrainTrace train(ParamSet params, const Mask& mask, const Dataset& train_set, const Dataset& test_set,
                 const TrainConfig& config, std::optional<TrainWindow> window,
                 const StepObserver& observer) {
  config.validate(train_set.size());
  const TrainWindow win = window.value_or(TrainWindow{0, config.epochs});
  if (win.first_epoch < 0 || win.num_epochs < 0) throw InvalidArgument("invalid training window");

  apply_mask(params, mask);
  const auto spe = steps_per_epoch(train_set.size(), config.batch_size);
  std::size_t step = static_cast<std::size_t>(win.first_epoch) * spe;

  TrainTrace trace;
  trace.initial_train = evaluate(params, mask, train_set);
  trace.initial_test = evaluate(params, mask, test_set);
  if (config.rewind_step == step) trace.rewind_checkpoint = params;

  SgdState state = SgdState::zeros(params);
  for (int e = win.first_epoch; e < win.first_epoch + win.num_epochs; ++e) {
    const SgdHyper hyper{lr_at(config.schedule, e), config.momentum, config.weight_decay};
    const auto plan = batch_indices(train_set.size(), config.batch_size,
                                    derive_seed(config.seed, Stream::kEpoch, static_cast<std::uint64_t>(e)));
    for (std::size_t b = 0; b < plan.size(); ++b) {
      try {
        const auto lg = loss_and_grads(params, mask, gather(train_set, plan[b]));
        sgd_step(params, lg.grads, state, hyper, mask);
      } catch (const Divergence& d) {
        trace.final_params = params;
        trace.steps = step;
        throw TrainingDiverged(std::string(d.what()) + " at epoch " + std::to_string(e) + ", batch " +
                                   std::to_string(b),
                               std::move(trace));
      }
      ++step;
      if (observer) observer(step, params);
      if (config.rewind_step == step) trace.rewind_checkpoint = params;
    }

    EpochRecord rec{e, hyper.lr, evaluate(params, mask, train_set), evaluate(params, mask, test_set)};
    if (!std::isfinite(rec.train.loss)) {
      trace.final_params = params;
      trace.steps = step;
      trace.epochs.push_back(rec);
      throw TrainingDiverged("non-finite train loss after epoch " + std::to_string(e), std::move(trace));
    }
    if (trace.best_test_epoch < 0 || rec.test.accuracy > trace.best_test_acc) {
      trace.best_test_acc = rec.test.accuracy;
      trace.best_test_epoch = e;
    }
    trace.epochs.push_back(rec);
  }
  trace.final_params = std::move(params);
  trace.steps = step;
  return trace;
}

}  // namespace sdd
