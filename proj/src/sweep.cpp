#include "sdd/sweep.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sdd/checkpoint.hpp"
#include "sdd/parallel.hpp"
#include "sdd/report.hpp"
#include "sdd/rng.hpp"

namespace sdd {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json metrics_json(const Metrics& train, const Metrics& test) {
  Json j;
  j["train_loss"] = train.loss;
  j["train_acc"] = train.accuracy;
  j["test_loss"] = test.loss;
  j["test_acc"] = test.accuracy;
  return j;
}

Json train_trace_json(const TrainTrace& t) {
  Json j;
  j["steps"] = t.steps;
  j["best_test_acc"] = t.best_test_acc;
  j["best_test_epoch"] = t.best_test_epoch;
  j["initial"] = metrics_json(t.initial_train, t.initial_test);
  Json epochs = Json::array();
  for (const auto& e : t.epochs) {
    epochs.push_back({e.epoch, e.lr, e.train.loss, e.train.accuracy, e.test.loss, e.test.accuracy});
  }
  j["epochs"] = std::move(epochs);
  return j;
}

TrainTrace train_trace_from_json(const Json& j) {
  TrainTrace t;
  t.steps = j.at("steps").get<std::size_t>();
  t.best_test_acc = j.at("best_test_acc").get<double>();
  t.best_test_epoch = j.at("best_test_epoch").get<int>();
  const auto& init = j.at("initial");
  t.initial_train = {init.at("train_loss").get<double>(), init.at("train_acc").get<double>()};
  t.initial_test = {init.at("test_loss").get<double>(), init.at("test_acc").get<double>()};
  for (const auto& e : j.at("epochs")) {
    EpochRecord r;
    r.epoch = e.at(0).get<int>();
    r.lr = e.at(1).get<double>();
    r.train = {e.at(2).get<double>(), e.at(3).get<double>()};
    r.test = {e.at(4).get<double>(), e.at(5).get<double>()};
    t.epochs.push_back(r);
  }
  return t;
}

ExperimentConfig single_seed(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.repeats = 1;
  c.output_dir.clear();
  return c;
}

// Writes config.json, or verifies that an existing one describes the same
// experiment.
void claim_directory(const fs::path& dir, const ExperimentConfig& snapshot) {
  fs::create_directories(dir);
  const auto path = dir / "config.json";
  const auto text = to_json(snapshot);
  if (fs::exists(path)) {
    if (read_text(path) != text) {
      throw ConfigError("run directory " + dir.string() + " holds a different experiment configuration");
    }
    return;
  }
  write_text_atomic(path, text);
}

fs::path trace_path(const fs::path& dir, std::size_t level) { return level_dir(dir, level) / "trace.json"; }

bool level_complete(const fs::path& dir, std::size_t level) {
  const auto ld = level_dir(dir, level);
  return fs::exists(ld / "trace.json") && fs::exists(ld / "final.sdd") && fs::exists(ld / "mask.sdd");
}

LevelResult load_level(const fs::path& dir, std::size_t level) {
  const auto ld = level_dir(dir, level);
  return level_from_json(read_text(ld / "trace.json"), load_params(ld / "final.sdd"), load_mask(ld / "mask.sdd"));
}

LevelContext make_context(const ExperimentConfig& cfg, const PreparedData& data, const RunOptions& options) {
  LevelContext ctx;
  ctx.train = &data.train.dataset;
  ctx.test = &data.test;
  ctx.spec = cfg.model;
  ctx.scope = default_scope(cfg.model);
  ctx.config = cfg.train;
  ctx.strategy = cfg.prune.strategy;
  ctx.fraction = cfg.prune.fraction;
  ctx.method = cfg.method;
  ctx.base_seed = cfg.seed;
  ctx.observer = options.observer;
  return ctx;
}

void say(const RunOptions& o, const std::string& msg) {
  if (o.log) o.log(msg);
}

std::string describe(const LevelResult& r) {
  const auto tr = final_train(r.trace);
  const auto te = final_test(r.trace);
  std::ostringstream ss;
  ss << "level " << r.level << " sparsity " << format_decimal(r.sparsity.prunable) << " train_acc "
     << format_decimal(tr.accuracy) << " test_acc " << format_decimal(te.accuracy) << " distance "
     << format_decimal(r.learning_distance);
  return ss.str();
}

void write_metadata(const fs::path& dir, const SweepResult& r, const PreparedData& data) {
  Json j;
  j["train_examples"] = data.train.dataset.size();
  j["test_examples"] = data.test.size();
  j["flipped_labels"] = data.train.flipped_count();
  j["levels_completed"] = r.levels.size();
  j["level_seconds"] = r.level_seconds;
  j["failure"] = r.failure ? Json(*r.failure) : Json(nullptr);
  write_text_atomic(dir / "metadata.json", j.dump(2) + "\n");
}

void run_configured_diagnostics(const fs::path& dir, const SweepResult& result, const PreparedData& data,
                                const RunOptions& options) {
  const auto& d = result.config.diagnostics;
  if (d.distance) {
    std::string out = "level,sparsity_prunable,learning_distance,final_test_acc\n";
    for (const auto& l : result.levels) {
      out += std::to_string(l.level) + "," + format_decimal(l.sparsity.prunable) + "," +
             format_decimal(l.learning_distance) + "," + format_decimal(final_test(l.trace).accuracy) + "\n";
    }
    write_text_atomic(dir / "distance.csv", out);
  }
  if (!(d.redense || d.interp || d.slice) || d.levels.empty()) return;
  LoadedRun run{dir, result.config, data, result};
  for (auto level : d.levels) {
    if (level >= result.levels.size()) continue;
    if (d.redense || d.interp) {
      if (!fs::exists(redense_dir(dir, level) / "trace.json")) diagnose_redense(run, level);
    }
    if (d.interp) diagnose_interp(run, level, 0.01, options.threads);
    if (d.slice) diagnose_slice(run, level, "sparse", derive_seed(result.config.seed, Stream::kSlice, level));
  }
}

}  // namespace

std::string labels_csv(const NoisyDataset& d) {
  std::string out = "index,clean,noisy,flipped\n";
  for (std::size_t i = 0; i < d.dataset.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(d.clean_labels[i]) + "," +
           std::to_string(d.dataset.labels[i]) + "," + std::to_string(int{d.flipped[i]}) + "\n";
  }
  return out;
}

std::string trace_to_json(const LevelResult& r) {
  Json j;
  j["level"] = r.level;
  j["seed"] = r.seed;
  j["sparsity_prunable"] = r.sparsity.prunable;
  j["sparsity_total"] = r.sparsity.total;
  j["surviving"] = r.sparsity.surviving;
  j["learning_distance"] = r.learning_distance;
  j["trace"] = train_trace_json(r.trace);
  return j.dump(1) + "\n";
}

LevelResult level_from_json(const std::string& text, ParamSet final_params, Mask mask) {
  try {
    const Json j = Json::parse(text);
    LevelResult r;
    r.level = j.at("level").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.sparsity.prunable = j.at("sparsity_prunable").get<double>();
    r.sparsity.total = j.at("sparsity_total").get<double>();
    r.sparsity.surviving = j.at("surviving").get<std::size_t>();
    r.learning_distance = j.at("learning_distance").get<double>();
    r.trace = train_trace_from_json(j.at("trace"));
    r.trace.final_params = std::move(final_params);
    r.mask = std::move(mask);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad_trace", std::string("malformed level trace: ") + e.what());
  }
}

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  const auto& dc = config.dataset;
  Dataset train_set;
  Dataset test_set;
  if (dc.name == "mnist") {
    const fs::path root = dc.path;
    train_set = load_mnist(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte",
                           config.model.num_classes());
    test_set = load_mnist(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte",
                          config.model.num_classes());
  } else {
    const Dataset all = make_synthetic(dc.train_size + dc.test_size, dc.input_dim, dc.num_classes,
                                       dc.separation, dc.seed);
    train_set = subset_first(all, dc.train_size);
    test_set.input_dim = all.input_dim;
    test_set.num_classes = all.num_classes;
    test_set.labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(dc.train_size), all.labels.end());
    test_set.features.assign(all.features.begin() + static_cast<std::ptrdiff_t>(dc.train_size * all.input_dim),
                             all.features.end());
  }
  auto take = [&](const Dataset& ds, std::size_t k, std::uint64_t salt) {
    if (k == 0) return ds;
    return dc.subset_mode == "sample" ? subset_sample(ds, k, derive_seed(dc.seed, salt)) : subset_first(ds, k);
  };
  train_set = take(train_set, dc.train_subset, 0);
  test_set = take(test_set, dc.test_subset, 1);
  if (train_set.input_dim != config.model.input_dim()) {
    throw ConfigError("model input size " + std::to_string(config.model.input_dim()) +
                      " does not match the data's " + std::to_string(train_set.input_dim));
  }
  train_set.validate();
  test_set.validate();

  NoiseSpec noise = config.noise;
  noise.seed = derive_seed(config.noise.seed, Stream::kNoise, seed);
  return {apply_noise(train_set, noise), std::move(test_set)};
}

SweepResult run_sweep(const ExperimentConfig& config, const fs::path& dir, const RunOptions& options) {
  SweepResult result;
  result.config = single_seed(config);
  result.config.validate();
  claim_directory(dir, result.config);

  const PreparedData data = prepare_data(result.config, result.config.seed);
  const auto labels_path = dir / "labels.csv";
  if (!fs::exists(labels_path)) write_text_atomic(labels_path, labels_csv(data.train));

  const LevelContext ctx = make_context(result.config, data, options);
  CheckpointStore store(dir);
  const auto levels = result.config.prune.levels;
  for (std::size_t level = 0; level <= levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      LevelResult r;
      if (level_complete(dir, level)) {
        r = load_level(dir, level);
      } else {
        r = level == 0 ? run_dense_level(store, ctx) : run_level(result.levels.back(), store, ctx);
        write_text_atomic(trace_path(dir, level), trace_to_json(r));
        say(options, "[seed " + std::to_string(result.config.seed) + "] " + describe(r));
      }
      result.levels.push_back(std::move(r));
    } catch (const Error& e) {
      result.failure = "level " + std::to_string(level) + ": " + e.code() + ": " + e.what();
      say(options, "[seed " + std::to_string(result.config.seed) + "] failed at " + *result.failure);
      write_text_atomic(dir / "failure.txt", *result.failure + "\n");
      break;
    }
    result.level_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (level >= 2) store.evict(level - 1);
  }
  if (!result.failure && fs::exists(dir / "failure.txt")) fs::remove(dir / "failure.txt");

  emit_csv(result, dir / "sweep.csv");
  write_metadata(dir, result, data);
  run_configured_diagnostics(dir, result, data, options);
  return result;
}

std::vector<SweepResult> run_experiment(const ExperimentConfig& config, const fs::path& dir,
                                        const RunOptions& options) {
  config.validate();
  const auto seeds = config.seeds();
  if (seeds.size() == 1) return {run_sweep(config, dir, options)};

  fs::create_directories(dir);
  write_text_atomic(dir / "experiment.json", to_json(config));
  std::vector<SweepResult> results(seeds.size());
  RunOptions inner = options;
  inner.threads = 1;
  parallel_for(seeds.size(), options.threads, [&](std::size_t i) {
    ExperimentConfig c = config;
    c.seed = seeds[i];
    results[i] = run_sweep(c, dir / ("seed_" + std::to_string(seeds[i])), inner);
  });
  write_text_atomic(dir / "aggregate.csv", aggregate_csv(results));
  return results;
}

ReinitComparison run_reinit_compare(const ExperimentConfig& config, const fs::path& dir,
                                    const RunOptions& options) {
  ExperimentConfig lottery_cfg = single_seed(config);
  std::size_t step = lottery_cfg.train.rewind_step;
  if (const auto* m = std::get_if<LotteryRewind>(&config.method)) step = m->step;
  lottery_cfg.method = LotteryRewind{step};
  lottery_cfg.train.rewind_step = step;

  ReinitComparison out;
  out.lottery = run_sweep(lottery_cfg, dir / "lottery", options);

  const fs::path rdir = dir / "reinit";
  ExperimentConfig reinit_cfg = lottery_cfg;
  reinit_cfg.method = Scratch{};
  reinit_cfg.diagnostics = {};
  claim_directory(rdir, reinit_cfg);
  out.reinit.config = reinit_cfg;

  const PreparedData data = prepare_data(reinit_cfg, reinit_cfg.seed);
  if (!fs::exists(rdir / "labels.csv")) write_text_atomic(rdir / "labels.csv", labels_csv(data.train));
  const LevelContext ctx = make_context(reinit_cfg, data, options);
  CheckpointStore store(rdir);

  // The dense level is shared by both arms.
  if (!level_complete(rdir, 0)) {
    const CheckpointStore lottery_store(dir / "lottery");
    store.put(0, lottery_store.at(0));
    write_text_atomic(trace_path(rdir, 0), trace_to_json(out.lottery.levels.at(0)));
  }

  const auto n = out.lottery.levels.size();
  std::vector<std::optional<LevelResult>> levels(n);
  std::vector<std::string> errors(n);
  levels[0] = load_level(rdir, 0);
  parallel_for(n - 1, options.threads, [&](std::size_t i) {
    const auto level = i + 1;
    try {
      if (level_complete(rdir, level)) {
        levels[level] = load_level(rdir, level);
        return;
      }
      auto r = train_level(level, out.lottery.levels[level].mask, Scratch{}, store, ctx);
      write_text_atomic(trace_path(rdir, level), trace_to_json(r));
      say(options, "[reinit seed " + std::to_string(reinit_cfg.seed) + "] " + describe(r));
      store.evict(level);
      levels[level] = std::move(r);
    } catch (const Error& e) {
      errors[level] = "level " + std::to_string(level) + ": " + e.code() + ": " + e.what();
    }
  });
  for (std::size_t level = 0; level < n; ++level) {
    if (!levels[level]) {
      out.reinit.failure = errors[level];
      break;
    }
    out.reinit.levels.push_back(std::move(*levels[level]));
  }
  emit_csv(out.reinit, rdir / "sweep.csv");
  write_text_atomic(dir / "compare.csv", compare_csv(out));
  return out;
}

SweepResult load_sweep(const fs::path& dir) {
  if (!fs::exists(dir / "config.json")) throw MissingArtifact("no sweep found in " + dir.string());
  SweepResult r;
  r.config = config_from_json(read_text(dir / "config.json"));
  for (std::size_t level = 0; level_complete(dir, level); ++level) r.levels.push_back(load_level(dir, level));
  if (fs::exists(dir / "failure.txt")) r.failure = read_text(dir / "failure.txt");
  return r;
}

LoadedRun load_run(const fs::path& dir) {
  LoadedRun run;
  run.dir = dir;
  run.sweep = load_sweep(dir);
  run.config = run.sweep.config;
  run.data = prepare_data(run.config, run.config.seed);
  const auto labels_path = dir / "labels.csv";
  if (fs::exists(labels_path) && read_text(labels_path) != labels_csv(run.data.train)) {
    throw FormatError("label_mismatch", "persisted labels in " + labels_path.string() +
                                            " differ from the regenerated noisy labels");
  }
  return run;
}

fs::path redense_dir(const fs::path& run_dir, std::size_t level) { return level_dir(run_dir, level) / "redense"; }

namespace {

const LevelResult& level_of(const LoadedRun& run, std::size_t level) {
  if (level >= run.sweep.levels.size()) {
    throw MissingArtifact("level " + std::to_string(level) + " not found in " + run.dir.string());
  }
  return run.sweep.levels[level];
}

ParamSet load_redense_params(const LoadedRun& run, std::size_t level) {
  const auto path = redense_dir(run.dir, level) / "final.sdd";
  if (!fs::exists(path)) {
    throw MissingArtifact("missing re-dense artifact for level " + std::to_string(level) +
                          " (run `diagnose redense --level " + std::to_string(level) + "` first)");
  }
  return load_params(path);
}

}  // namespace

RedenseResult diagnose_redense(const LoadedRun& run, std::size_t level) {
  const auto& lr = level_of(run, level);
  auto res = redense_train(lr, run.data.train.dataset, run.data.test, run.config.train, run.config.seed);
  const auto rdir = redense_dir(run.dir, level);
  save_params(rdir / "final.sdd", res.trace.final_params);
  Json j = train_trace_json(res.trace);
  j["lr"] = res.lr;
  write_text_atomic(rdir / "trace.json", j.dump(1) + "\n");
  write_text_atomic(level_dir(run.dir, level) / "redense.csv", trace_csv(res.trace));
  return res;
}

InterpScan diagnose_interp(const LoadedRun& run, std::size_t level, double step, unsigned threads) {
  const auto& lr = level_of(run, level);
  const ParamSet redense = load_redense_params(run, level);
  ParamSet sparse = lr.trace.final_params;
  apply_mask(sparse, lr.mask);
  auto scan = interp_scan(sparse, redense, run.data.train.dataset, run.data.test, step, threads);
  write_text_atomic(level_dir(run.dir, level) / "interp.csv", interp_csv(scan));
  return scan;
}

LandscapeSlice diagnose_slice(const LoadedRun& run, std::size_t level, const std::string& target,
                              std::uint64_t direction_seed, double span, int points, unsigned threads) {
  const auto& lr = level_of(run, level);
  ParamSet center;
  if (target == "sparse") {
    center = lr.trace.final_params;
    apply_mask(center, lr.mask);
  } else if (target == "redense") {
    center = load_redense_params(run, level);
  } else {
    throw InvalidArgument("slice target must be 'sparse' or 'redense'");
  }
  auto slice = landscape_slice(center, run.data.train.dataset, direction_seed, span, points, threads);
  write_text_atomic(level_dir(run.dir, level) / ("slice_" + target + ".csv"), slice_csv(slice));
  return slice;
}

std::vector<double> diagnose_distance(const LoadedRun& run) {
  const CheckpointStore store(run.dir);
  const ParamSet& init = store.at(0).start;
  std::vector<double> out;
  std::string csv = "level,sparsity_prunable,learning_distance,final_test_acc\n";
  for (const auto& l : run.sweep.levels) {
    const double d = learning_distance(init, l.trace.final_params, l.mask);
    out.push_back(d);
    csv += std::to_string(l.level) + "," + format_decimal(l.sparsity.prunable) + "," + format_decimal(d) + "," +
           format_decimal(final_test(l.trace).accuracy) + "\n";
  }
  write_text_atomic(run.dir / "distance.csv", csv);
  return out;
}

std::vector<LevelAccuracy> level_accuracies(const SweepResult& sweep) {
  std::vector<LevelAccuracy> out;
  for (const auto& l : sweep.levels) out.push_back({final_train(l.trace).accuracy, final_test(l.trace).accuracy});
  return out;
}

}  // namespace sdd
