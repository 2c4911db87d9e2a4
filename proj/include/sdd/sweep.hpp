#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdd/config.hpp"
#include "sdd/diagnostics.hpp"
#include "sdd/noise.hpp"
#include "sdd/retrain.hpp"

namespace sdd {

struct RunOptions {
  unsigned threads = 1;  // independent work only; never changes results
  std::function<void(const std::string&)> log;
  StepObserver observer;  // forwarded to every training run (tests)
};

struct PreparedData {
  NoisyDataset train;
  Dataset test;
};

/// Loads (or synthesizes) the datasets, applies subsetting and label noise.
/// The noise stream is keyed by (noise.seed, seed).
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

/// index,clean,noisy,flipped rows; persisted as labels.csv in every run.
std::string labels_csv(const NoisyDataset& data);

struct SweepResult {
  ExperimentConfig config;  // single-seed snapshot
  std::vector<LevelResult> levels;
  std::optional<std::string> failure;
  std::vector<double> level_seconds;
};

/// Dense training then config.prune.levels prune/retrain rounds for the seed
/// config.seed. Everything is persisted under `dir`; completed levels found
/// there are loaded instead of retrained.
SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& dir,
                      const RunOptions& options = {});

/// One sweep per seed in config.seeds(). A single seed writes straight into
/// `dir`; several write dir/seed_<s>/ plus dir/aggregate.csv.
std::vector<SweepResult> run_experiment(const ExperimentConfig& config, const std::filesystem::path& dir,
                                        const RunOptions& options = {});

struct ReinitComparison {
  SweepResult lottery;
  SweepResult reinit;
};

/// A lottery-rewind sweep in dir/lottery, then every level's mask retrained
/// from a fresh per-level initialization with the full schedule in
/// dir/reinit. Writes dir/compare.csv.
ReinitComparison run_reinit_compare(const ExperimentConfig& config, const std::filesystem::path& dir,
                                    const RunOptions& options = {});

/// A finished (or partial) sweep directory loaded back into memory.
struct LoadedRun {
  std::filesystem::path dir;
  ExperimentConfig config;
  PreparedData data;
  SweepResult sweep;
};

/// Config snapshot and level results only (no datasets); enough for
/// reporting and plotting.
SweepResult load_sweep(const std::filesystem::path& dir);
LoadedRun load_run(const std::filesystem::path& dir);

std::filesystem::path redense_dir(const std::filesystem::path& run_dir, std::size_t level);

/// Runs re-dense training from `level` and persists redense/{final.sdd,
/// trace.json} plus redense.csv in the level directory.
RedenseResult diagnose_redense(const LoadedRun& run, std::size_t level);
/// Needs the re-dense artifact of `level`; writes interp.csv.
InterpScan diagnose_interp(const LoadedRun& run, std::size_t level, double step = 0.01,
                           unsigned threads = 1);
/// target "sparse" (level's final weights) or "redense"; writes slice_<target>.csv.
LandscapeSlice diagnose_slice(const LoadedRun& run, std::size_t level, const std::string& target,
                              std::uint64_t direction_seed, double span = 1.0, int points = 41,
                              unsigned threads = 1);
/// Recomputes every level's learning distance; writes distance.csv.
std::vector<double> diagnose_distance(const LoadedRun& run);

/// Per-level test/train accuracy for the phase and signature detectors.
std::vector<LevelAccuracy> level_accuracies(const SweepResult& sweep);

// Level trace (de)serialization, exposed for tests.
std::string trace_to_json(const LevelResult& level);
LevelResult level_from_json(const std::string& text, ParamSet final_params, Mask mask);

}  // namespace sdd
