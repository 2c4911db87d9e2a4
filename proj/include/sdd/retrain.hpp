#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include "sdd/data_io.hpp"
#include "sdd/mask.hpp"
#include "sdd/masking.hpp"
#include "sdd/optim.hpp"
#include "sdd/params.hpp"

namespace sdd {

/// Rewind surviving weights and the schedule to optimizer step `step`.
struct LotteryRewind {
  std::size_t step = 0;
};
/// Continue from the previous level's final weights at a fixed rate.
struct Finetune {
  double lr = 0.1;
};
/// Continue from the final weights, schedule rewound to `step`.
struct LrRewind {
  std::size_t step = 0;
};
/// Fresh initialization (new seed per level), full schedule.
struct Scratch {};

using RetrainMethod = std::variant<LotteryRewind, Finetune, LrRewind, Scratch>;

std::string method_name(const RetrainMethod& m);

/// Seed of the dense initialization (level 0) and of scratch re-inits
/// (level k >= 1).
std::uint64_t init_seed(std::uint64_t base_seed, std::size_t level);
/// Seed of the per-epoch shuffles of a level's training run.
std::uint64_t level_train_seed(std::uint64_t base_seed, std::size_t level);

struct LevelCheckpoints {
  ParamSet start;                  // weights the level's training began from
  std::optional<ParamSet> rewind;  // weights after `rewind_step` steps (dense level)
  ParamSet final;
  Mask mask;
};

/// Per-level checkpoints, kept in memory and mirrored to
/// <root>/levels/level_NNN/{start,rewind,final}.sdd and mask.sdd when a root
/// directory is given. Safe to share between threads working on distinct
/// levels.
class CheckpointStore {
 public:
  CheckpointStore() = default;
  explicit CheckpointStore(std::filesystem::path root);

  void put(std::size_t level, LevelCheckpoints checkpoints);
  bool has(std::size_t level) const;
  /// Throws MissingArtifact naming the level.
  const LevelCheckpoints& at(std::size_t level) const;
  /// Drops the in-memory copy; disk files stay.
  void evict(std::size_t level) const;

  const std::optional<std::filesystem::path>& root() const { return root_; }
  std::filesystem::path level_dir(std::size_t level) const;

 private:
  std::optional<std::filesystem::path> root_;
  mutable std::map<std::size_t, LevelCheckpoints> cache_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

std::filesystem::path level_dir(const std::filesystem::path& root, std::size_t level);

struct LevelResult {
  std::size_t level = 0;
  Mask mask;
  Sparsity sparsity;
  TrainTrace trace;
  double learning_distance = 0.0;
  std::uint64_t seed = 0;
};

struct StartState {
  ParamSet params;
  TrainWindow window;
  LrSchedule schedule;
};

/// Whole epochs covered by `step`: ceil(step / steps_per_epoch).
int rewind_epochs(std::size_t step, std::size_t steps_per_epoch);

StartState start_state(const RetrainMethod& method, const CheckpointStore& store, std::size_t level,
                       const Mask& new_mask, const MlpSpec& spec, const TrainConfig& config,
                       std::size_t train_size, std::uint64_t base_seed);

/// Everything a sweep level needs besides the previous level.
struct LevelContext {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
  MlpSpec spec;
  PrunableScope scope;
  TrainConfig config;
  PruneStrategy strategy = PruneStrategy::kMagnitude;
  double fraction = 0.2;
  RetrainMethod method = LotteryRewind{0};
  std::uint64_t base_seed = 0;
  StepObserver observer;
};

/// Dense level 0: fresh init, all-ones mask, full schedule. Captures the
/// rewind checkpoint when the method rewinds.
LevelResult run_dense_level(CheckpointStore& store, const LevelContext& ctx);

/// Scores `prev`'s trained weights and prunes `ctx.fraction` of the survivors.
Mask next_mask(const LevelResult& prev, const LevelContext& ctx);

/// Trains level `level` under `mask` with `method` and stores its checkpoints.
LevelResult train_level(std::size_t level, const Mask& mask, const RetrainMethod& method,
                        CheckpointStore& store, const LevelContext& ctx);

/// next_mask followed by train_level with ctx.method.
LevelResult run_level(const LevelResult& prev, CheckpointStore& store, const LevelContext& ctx);

}  // namespace sdd
