#include "sdd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sdd {

using Json = nlohmann::ordered_json;

ExperimentConfig ExperimentConfig::lenet_mnist(const std::string& mnist_dir) {
  ExperimentConfig c;
  c.dataset.name = "mnist";
  c.dataset.path = mnist_dir;
  c.dataset.num_classes = 10;
  c.dataset.input_dim = 784;
  c.noise = {NoiseKind::kSymmetric, 0.2, 0, {}};
  c.model = MlpSpec::lenet_300_100();
  c.train.epochs = 200;
  c.train.batch_size = 128;
  c.train.momentum = 0.0;
  c.train.weight_decay = 0.0;
  c.train.schedule = {0.1, {}, 1.0, std::nullopt};
  c.train.rewind_step = 0;
  c.prune = {PruneStrategy::kMagnitude, 0.2, 25};
  c.method = LotteryRewind{0};
  return c;
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < repeats; ++i) s.push_back(seed + i);
  return s;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (dataset.name != "mnist" && dataset.name != "synthetic") {
    throw ConfigError("dataset.name must be 'mnist' or 'synthetic'");
  }
  if (dataset.subset_mode != "first" && dataset.subset_mode != "sample") {
    throw ConfigError("dataset.subset_mode must be 'first' or 'sample'");
  }
  if (dataset.name == "synthetic") {
    if (model.input_dim() != dataset.input_dim || model.num_classes() != dataset.num_classes) {
      throw ConfigError("model.layer_sizes must start with dataset.input_dim and end with dataset.num_classes");
    }
  }
  if (!(prune.fraction > 0.0 && prune.fraction < 1.0)) throw ConfigError("prune.fraction must be in (0, 1)");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (train.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  try {
    train.schedule.validate();
    noise.validate(model.num_classes());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

namespace {

Json method_json(const RetrainMethod& m) {
  Json j;
  j["method"] = method_name(m);
  std::size_t step = 0;
  double lr = 0.1;
  if (const auto* p = std::get_if<LotteryRewind>(&m)) step = p->step;
  if (const auto* p = std::get_if<LrRewind>(&m)) step = p->step;
  if (const auto* p = std::get_if<Finetune>(&m)) lr = p->lr;
  j["rewind_step"] = step;
  j["finetune_lr"] = lr;
  return j;
}

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <class T>
void get(const Json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

}  // namespace

std::string to_json(const ExperimentConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["repeats"] = c.repeats;
  j["output_dir"] = c.output_dir;

  Json& d = j["dataset"];
  d["name"] = c.dataset.name;
  d["path"] = c.dataset.path;
  d["train_subset"] = c.dataset.train_subset;
  d["test_subset"] = c.dataset.test_subset;
  d["subset_mode"] = c.dataset.subset_mode;
  d["seed"] = c.dataset.seed;
  d["train_size"] = c.dataset.train_size;
  d["test_size"] = c.dataset.test_size;
  d["input_dim"] = c.dataset.input_dim;
  d["num_classes"] = c.dataset.num_classes;
  d["separation"] = c.dataset.separation;

  Json& n = j["noise"];
  n["kind"] = to_string(c.noise.kind);
  n["rate"] = c.noise.rate;
  n["seed"] = c.noise.seed;
  Json cmap = Json::array();
  for (const auto& [src, dst] : c.noise.class_map) cmap.push_back({src, dst});
  n["class_map"] = cmap;

  j["model"]["layer_sizes"] = c.model.layer_sizes;

  Json& t = j["train"];
  t["epochs"] = c.train.epochs;
  t["batch_size"] = c.train.batch_size;
  t["momentum"] = c.train.momentum;
  t["weight_decay"] = c.train.weight_decay;
  t["lr"] = c.train.schedule.fixed.value_or(c.train.schedule.base_lr);
  t["lr_drops"] = c.train.schedule.drop_epochs;
  t["drop_factor"] = c.train.schedule.drop_factor;

  Json& p = j["prune"];
  p["strategy"] = to_string(c.prune.strategy);
  p["fraction"] = c.prune.fraction;
  p["levels"] = c.prune.levels;

  j["retrain"] = method_json(c.method);

  Json& g = j["diagnostics"];
  g["distance"] = c.diagnostics.distance;
  g["redense"] = c.diagnostics.redense;
  g["interp"] = c.diagnostics.interp;
  g["slice"] = c.diagnostics.slice;
  g["levels"] = c.diagnostics.levels;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "", {"seed", "repeats", "output_dir", "dataset", "noise", "model", "train", "prune",
                     "retrain", "diagnostics"});
  ExperimentConfig c;
  get(j, "seed", c.seed, "");
  get(j, "repeats", c.repeats, "");
  get(j, "output_dir", c.output_dir, "");

  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    check_keys(d, "dataset", {"name", "path", "train_subset", "test_subset", "subset_mode", "seed",
                              "train_size", "test_size", "input_dim", "num_classes", "separation"});
    get(d, "name", c.dataset.name, "dataset");
    get(d, "path", c.dataset.path, "dataset");
    get(d, "train_subset", c.dataset.train_subset, "dataset");
    get(d, "test_subset", c.dataset.test_subset, "dataset");
    get(d, "subset_mode", c.dataset.subset_mode, "dataset");
    get(d, "seed", c.dataset.seed, "dataset");
    get(d, "train_size", c.dataset.train_size, "dataset");
    get(d, "test_size", c.dataset.test_size, "dataset");
    get(d, "input_dim", c.dataset.input_dim, "dataset");
    get(d, "num_classes", c.dataset.num_classes, "dataset");
    get(d, "separation", c.dataset.separation, "dataset");
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    check_keys(n, "noise", {"kind", "rate", "seed", "class_map"});
    std::string kind = "none";
    get(n, "kind", kind, "noise");
    c.noise.kind = parse_noise_kind(kind);
    get(n, "rate", c.noise.rate, "noise");
    get(n, "seed", c.noise.seed, "noise");
    if (n.contains("class_map")) {
      std::vector<std::pair<int, int>> pairs;
      get(n, "class_map", pairs, "noise");
      for (const auto& [src, dst] : pairs) c.noise.class_map[src] = dst;
    } else if (c.noise.kind == NoiseKind::kAsymmetric) {
      c.noise.class_map = mnist_class_map();
    }
  }
  if (j.contains("model")) {
    check_keys(j["model"], "model", {"layer_sizes"});
    get(j["model"], "layer_sizes", c.model.layer_sizes, "model");
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    check_keys(t, "train", {"epochs", "batch_size", "momentum", "weight_decay", "lr", "lr_drops", "drop_factor"});
    get(t, "epochs", c.train.epochs, "train");
    get(t, "batch_size", c.train.batch_size, "train");
    get(t, "momentum", c.train.momentum, "train");
    get(t, "weight_decay", c.train.weight_decay, "train");
    double lr = c.train.schedule.fixed.value_or(c.train.schedule.base_lr);
    get(t, "lr", lr, "train");
    c.train.schedule = {lr, {}, 1.0, std::nullopt};
    get(t, "lr_drops", c.train.schedule.drop_epochs, "train");
    get(t, "drop_factor", c.train.schedule.drop_factor, "train");
  }
  if (j.contains("prune")) {
    const auto& p = j["prune"];
    check_keys(p, "prune", {"strategy", "fraction", "levels"});
    std::string strategy = "magnitude";
    get(p, "strategy", strategy, "prune");
    c.prune.strategy = parse_prune_strategy(strategy);
    get(p, "fraction", c.prune.fraction, "prune");
    get(p, "levels", c.prune.levels, "prune");
  }
  if (j.contains("retrain")) {
    const auto& r = j["retrain"];
    check_keys(r, "retrain", {"method", "rewind_step", "finetune_lr"});
    std::string method = "lottery";
    std::size_t step = 0;
    double lr = 0.1;
    get(r, "method", method, "retrain");
    get(r, "rewind_step", step, "retrain");
    get(r, "finetune_lr", lr, "retrain");
    if (method == "lottery") {
      c.method = LotteryRewind{step};
    } else if (method == "finetune") {
      c.method = Finetune{lr};
    } else if (method == "lr_rewind") {
      c.method = LrRewind{step};
    } else if (method == "scratch") {
      c.method = Scratch{};
    } else {
      throw ConfigError("unknown retrain method '" + method + "'");
    }
    c.train.rewind_step = step;
  }
  if (j.contains("diagnostics")) {
    const auto& g = j["diagnostics"];
    check_keys(g, "diagnostics", {"distance", "redense", "interp", "slice", "levels"});
    get(g, "distance", c.diagnostics.distance, "diagnostics");
    get(g, "redense", c.diagnostics.redense, "diagnostics");
    get(g, "interp", c.diagnostics.interp, "diagnostics");
    get(g, "slice", c.diagnostics.slice, "diagnostics");
    get(g, "levels", c.diagnostics.levels, "diagnostics");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace sdd
