#include "doctest.h"
#include "sdd/config.hpp"
#include "sdd/errors.hpp"
#include "support.hpp"

using namespace sdd;

namespace {

std::string message_of(const std::string& json) {
  try {
    config_from_json(json);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("json round-trip is a fixed point") {
  auto c = testing::tiny_config();
  c.method = LrRewind{6};
  c.diagnostics.levels = {1, 3};
  c.noise = {NoiseKind::kAsymmetric, 0.3, 2, {{0, 1}, {2, 0}}};
  const auto text = to_json(c);
  const auto back = config_from_json(text);
  CHECK(to_json(back) == text);
  CHECK(std::get<LrRewind>(back.method).step == 6);
  CHECK(back.noise.class_map.at(2) == 0);
}

TEST_CASE("an empty document gives the defaults") {
  const auto c = config_from_json("{}");
  CHECK(to_json(c) == to_json(ExperimentConfig{}));
  CHECK(c.seeds() == std::vector<std::uint64_t>{1});
}

TEST_CASE("unknown keys are named with their path") {
  CHECK(message_of(R"({"bogus": 1})").find("'bogus'") != std::string::npos);
  CHECK(message_of(R"({"train": {"epoch": 3}})").find("'train.epoch'") != std::string::npos);
  CHECK(message_of(R"({"train": {"epochs": "3"}})").find("wrong type") != std::string::npos);
  CHECK(message_of("{").find("not valid JSON") != std::string::npos);
}

TEST_CASE("semantic validation") {
  CHECK(!message_of(R"({"prune": {"fraction": 1.0}})").empty());
  CHECK(!message_of(R"({"retrain": {"method": "snip"}})").empty());
  CHECK(!message_of(R"({"model": {"layer_sizes": [8, 16, 4]}})").empty());
  CHECK(!message_of(R"({"noise": {"kind": "symmetric", "rate": 1.5}})").empty());
  CHECK(!message_of(R"({"dataset": {"subset_mode": "random"}})").empty());
  CHECK(message_of(R"({"retrain": {"method": "finetune", "finetune_lr": 0.01}})").empty());
}

TEST_CASE("asymmetric noise defaults to the MNIST class map") {
  const auto c = config_from_json(
      R"({"dataset": {"num_classes": 10}, "model": {"layer_sizes": [8, 16, 10]}, "noise": {"kind": "asymmetric", "rate": 0.2}})");
  CHECK(c.noise.class_map == mnist_class_map());
}

TEST_CASE("the LeNet preset") {
  const auto c = ExperimentConfig::lenet_mnist("/data");
  CHECK(c.model.layer_sizes == std::vector<std::size_t>{784, 300, 100, 10});
  CHECK(c.train.epochs == 200);
  CHECK(c.train.batch_size == 128);
  CHECK(c.train.momentum == 0.0);
  CHECK(lr_at(c.train.schedule, 199) == 0.1);
  CHECK(c.prune.fraction == 0.2);
  CHECK_NOTHROW(c.validate());
  auto r = c;
  r.repeats = 3;
  CHECK(r.seeds() == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("load_config reports unreadable files") {
  testing::TempDir tmp("cfg");
  CHECK_THROWS_AS(load_config(tmp / "missing.json"), ConfigError);
  std::ofstream(tmp / "c.json") << to_json(testing::tiny_config());
  CHECK(load_config(tmp / "c.json").seed == 7);
}
