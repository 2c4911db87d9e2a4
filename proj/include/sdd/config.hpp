#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdd/masking.hpp"
#include "sdd/noise.hpp"
#include "sdd/optim.hpp"
#include "sdd/params.hpp"
#include "sdd/retrain.hpp"

namespace sdd {

struct DatasetConfig {
  std::string name = "synthetic";  // "mnist" or "synthetic"
  std::string path;                // directory with the four IDX files (mnist)
  std::size_t train_subset = 0;    // 0 = everything
  std::size_t test_subset = 0;
  std::string subset_mode = "first";  // "first" or "sample"
  std::uint64_t seed = 0;          // subset sampling / synthetic draw
  // synthetic only
  std::size_t train_size = 512;
  std::size_t test_size = 256;
  std::size_t input_dim = 8;
  std::size_t num_classes = 3;
  double separation = 3.0;
};

struct PruneConfig {
  PruneStrategy strategy = PruneStrategy::kMagnitude;
  double fraction = 0.2;
  std::size_t levels = 10;
};

struct DiagnosticsConfig {
  bool distance = true;
  bool redense = false;
  bool interp = false;
  bool slice = false;
  std::vector<std::size_t> levels;  // levels the redense/interp/slice toggles apply to
};

struct ExperimentConfig {
  DatasetConfig dataset;
  NoiseSpec noise;
  MlpSpec model{{8, 16, 16, 3}};
  TrainConfig train;
  PruneConfig prune;
  RetrainMethod method = LotteryRewind{0};
  DiagnosticsConfig diagnostics;
  std::string output_dir;
  std::uint64_t seed = 1;
  std::size_t repeats = 1;  // seeds seed, seed+1, ...

  /// LeNet-300-100 on MNIST: 200
  /// epochs, batch 128, lr 0.1, no momentum or decay, rewind step 0.
  static ExperimentConfig lenet_mnist(const std::string& mnist_dir);

  std::vector<std::uint64_t> seeds() const;
  void validate() const;
};

/// Canonical JSON document (fixed key order, pretty-printed).
std::string to_json(const ExperimentConfig& config);
/// Rejects unknown keys anywhere in the document, naming the key path.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace sdd
