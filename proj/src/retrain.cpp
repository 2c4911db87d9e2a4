#include "sdd/retrain.hpp"

#include <cstdio>

#include "sdd/checkpoint.hpp"
#include "sdd/diagnostics.hpp"
#include "sdd/rng.hpp"

namespace sdd {

namespace {
template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <class... F>
Overloaded(F...) -> Overloaded<F...>;
}  // namespace

std::string method_name(const RetrainMethod& m) {
  return std::visit(Overloaded{[](const LotteryRewind&) { return std::string("lottery"); },
                               [](const Finetune&) { return std::string("finetune"); },
                               [](const LrRewind&) { return std::string("lr_rewind"); },
                               [](const Scratch&) { return std::string("scratch"); }},
                    m);
}

std::uint64_t init_seed(std::uint64_t base_seed, std::size_t level) {
  return derive_seed(base_seed, Stream::kInit, level);
}

std::uint64_t level_train_seed(std::uint64_t base_seed, std::size_t level) {
  return derive_seed(base_seed, Stream::kShuffle, level);
}

std::filesystem::path level_dir(const std::filesystem::path& root, std::size_t level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "level_%03zu", level);
  return root / "levels" / buf;
}

CheckpointStore::CheckpointStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path CheckpointStore::level_dir(std::size_t level) const {
  if (!root_) throw MissingArtifact("checkpoint store has no directory");
  return sdd::level_dir(*root_, level);
}

void CheckpointStore::put(std::size_t level, LevelCheckpoints cp) {
  if (root_) {
    const auto dir = level_dir(level);
    save_params(dir / "start.sdd", cp.start);
    if (cp.rewind) save_params(dir / "rewind.sdd", *cp.rewind);
    save_mask(dir / "mask.sdd", cp.mask);
    save_params(dir / "final.sdd", cp.final);
  }
  std::lock_guard lock(*mutex_);
  cache_[level] = std::move(cp);
}

bool CheckpointStore::has(std::size_t level) const {
  {
    std::lock_guard lock(*mutex_);
    if (cache_.count(level)) return true;
  }
  if (!root_) return false;
  const auto dir = level_dir(level);
  return std::filesystem::exists(dir / "final.sdd") && std::filesystem::exists(dir / "mask.sdd") &&
         std::filesystem::exists(dir / "start.sdd");
}

const LevelCheckpoints& CheckpointStore::at(std::size_t level) const {
  {
    std::lock_guard lock(*mutex_);
    if (auto it = cache_.find(level); it != cache_.end()) return it->second;
  }
  if (!has(level)) throw MissingArtifact("missing checkpoint for level " + std::to_string(level));
  const auto dir = level_dir(level);
  LevelCheckpoints cp;
  cp.start = load_params(dir / "start.sdd");
  if (std::filesystem::exists(dir / "rewind.sdd")) cp.rewind = load_params(dir / "rewind.sdd");
  cp.final = load_params(dir / "final.sdd");
  cp.mask = load_mask(dir / "mask.sdd");
  std::lock_guard lock(*mutex_);
  return cache_.emplace(level, std::move(cp)).first->second;
}

void CheckpointStore::evict(std::size_t level) const {
  if (!root_) return;
  std::lock_guard lock(*mutex_);
  cache_.erase(level);
}

int rewind_epochs(std::size_t step, std::size_t spe) {
  return static_cast<int>((step + spe - 1) / spe);
}

StartState start_state(const RetrainMethod& method, const CheckpointStore& store, std::size_t level,
                       const Mask& new_mask, const MlpSpec& spec, const TrainConfig& config,
                       std::size_t train_size, std::uint64_t base_seed) {
  const auto spe = steps_per_epoch(train_size, config.batch_size);
  const int total = config.epochs;
  StartState s;
  s.schedule = config.schedule;

  auto previous_final = [&]() -> ParamSet {
    if (level == 0) throw MissingArtifact("level 0 has no previous level");
    return store.at(level - 1).final;
  };
  auto rewound_window = [&](std::size_t step) {
    const int te = rewind_epochs(step, spe);
    if (te > total) throw InvalidArgument("rewind step lies beyond the training run");
    return TrainWindow{te, total - te};
  };

  std::visit(Overloaded{
                 [&](const LotteryRewind& m) {
                   const auto& dense = store.at(0);
                   if (!dense.rewind) {
                     throw MissingArtifact("level 0 has no rewind checkpoint (needed for level " +
                                           std::to_string(level) + ")");
                   }
                   s.params = *dense.rewind;
                   s.window = rewound_window(m.step);
                 },
                 [&](const Finetune& m) {
                   s.params = previous_final();
                   s.schedule = LrSchedule::constant(m.lr);
                   s.window = {0, total};
                 },
                 [&](const LrRewind& m) {
                   s.params = previous_final();
                   s.window = rewound_window(m.step);
                 },
                 [&](const Scratch&) {
                   s.params = init_params(spec, init_seed(base_seed, level));
                   s.window = {0, total};
                 }},
             method);
  apply_mask(s.params, new_mask);
  return s;
}

namespace {

std::size_t method_rewind_step(const RetrainMethod& method, std::size_t fallback) {
  if (const auto* m = std::get_if<LotteryRewind>(&method)) return m->step;
  if (const auto* m = std::get_if<LrRewind>(&method)) return m->step;
  return fallback;
}

}  // namespace

LevelResult run_dense_level(CheckpointStore& store, const LevelContext& ctx) {
  LevelResult r;
  r.level = 0;
  r.seed = level_train_seed(ctx.base_seed, 0);
  r.mask = Mask::all_ones(ctx.spec, ctx.scope);
  r.sparsity = sparsity(r.mask, ctx.spec);

  TrainConfig cfg = ctx.config;
  cfg.seed = r.seed;
  cfg.rewind_step = method_rewind_step(ctx.method, ctx.config.rewind_step);
  ParamSet init = init_params(ctx.spec, init_seed(ctx.base_seed, 0));
  r.trace = train(init, r.mask, *ctx.train, *ctx.test, cfg, std::nullopt, ctx.observer);
  r.learning_distance = learning_distance(init, r.trace.final_params, r.mask);

  store.put(0, {std::move(init), r.trace.rewind_checkpoint, r.trace.final_params, r.mask});
  return r;
}

Mask next_mask(const LevelResult& prev, const LevelContext& ctx) {
  const auto level = prev.level + 1;
  Batch batch;
  std::optional<Rng> rng;
  if (ctx.strategy == PruneStrategy::kGradient) {
    Rng pick(derive_seed(ctx.base_seed, Stream::kPruneBatch, level));
    const auto n = std::min(ctx.config.batch_size, ctx.train->size());
    const auto idx = pick.sample_without_replacement(ctx.train->size(), n);
    batch = gather(*ctx.train, idx);
  } else if (ctx.strategy == PruneStrategy::kRandom) {
    rng.emplace(derive_seed(ctx.base_seed, Stream::kPruneRandom, level));
  }
  const auto scores = compute_scores(ctx.strategy, prev.trace.final_params, prev.mask,
                                     ctx.strategy == PruneStrategy::kGradient ? &batch : nullptr,
                                     rng ? &*rng : nullptr);
  return prune_global(prev.mask, scores, ctx.fraction);
}

LevelResult train_level(std::size_t level, const Mask& mask, const RetrainMethod& method,
                        CheckpointStore& store, const LevelContext& ctx) {
  LevelResult r;
  r.level = level;
  r.seed = level_train_seed(ctx.base_seed, level);
  r.mask = mask;
  r.sparsity = sparsity(mask, ctx.spec);

  StartState start = start_state(method, store, level, mask, ctx.spec, ctx.config, ctx.train->size(),
                                 ctx.base_seed);
  TrainConfig cfg = ctx.config;
  cfg.seed = r.seed;
  cfg.schedule = start.schedule;
  // Only the dense run captures a rewind point.
  cfg.rewind_step = static_cast<std::size_t>(start.window.first_epoch) *
                    steps_per_epoch(ctx.train->size(), cfg.batch_size);
  r.trace = train(start.params, mask, *ctx.train, *ctx.test, cfg, start.window, ctx.observer);
  r.trace.rewind_checkpoint.reset();
  r.learning_distance = learning_distance(store.at(0).start, r.trace.final_params, mask);

  store.put(level, {std::move(start.params), std::nullopt, r.trace.final_params, mask});
  return r;
}

LevelResult run_level(const LevelResult& prev, CheckpointStore& store, const LevelContext& ctx) {
  return train_level(prev.level + 1, next_mask(prev, ctx), ctx.method, store, ctx);
}

}  // namespace sdd
