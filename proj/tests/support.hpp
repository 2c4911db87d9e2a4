#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "sdd/config.hpp"

namespace sdd::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("sdd_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A few-second synthetic experiment: 8-16-16-3 MLP, 20% symmetric noise.
inline ExperimentConfig tiny_config(std::size_t levels = 4, int epochs = 3) {
  ExperimentConfig c;
  c.seed = 7;
  c.dataset.train_size = 240;
  c.dataset.test_size = 120;
  c.dataset.seed = 11;
  c.noise = {NoiseKind::kSymmetric, 0.2, 5, {}};
  c.train.epochs = epochs;
  c.train.batch_size = 32;
  c.train.schedule = LrSchedule::constant(0.1);
  c.prune.levels = levels;
  c.method = LotteryRewind{0};
  return c;
}

}  // namespace sdd::testing
