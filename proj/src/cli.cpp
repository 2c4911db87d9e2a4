#include "sdd/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdd/checkpoint.hpp"
#include "sdd/config.hpp"
#include "sdd/diagnostics.hpp"
#include "sdd/report.hpp"
#include "sdd/rng.hpp"
#include "sdd/sweep.hpp"

namespace sdd {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> levels;
  unsigned threads = 1;
};

struct Args {
  Globals g;
  std::vector<std::string> runs;
  std::optional<std::size_t> level;
  std::string kind = "accuracy";
  std::string axis = "log";
  std::string target = "sparse";
  std::optional<std::uint64_t> direction_seed;
  double span = 1.0;
  int points = 41;
  double step = 0.01;
  double fit_fraction = 0.99;
  double dip_margin = 0.01;
  double collapse_margin = 0.05;
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

ExperimentConfig experiment_from_args(const Globals& g) {
  if (g.config.empty()) throw InvalidArgument("--config is required");
  ExperimentConfig c = load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (g.levels) c.prune.levels = *g.levels;
  if (!g.out.empty()) c.output_dir = g.out;
  if (c.output_dir.empty()) throw InvalidArgument("no output directory: pass --out or set output_dir");
  c.validate();
  return c;
}

RunOptions run_options(const Globals& g, std::ostream& err, std::mutex& log_mutex) {
  RunOptions o;
  o.threads = std::max(1u, g.threads);
  o.log = [&err, &log_mutex](const std::string& msg) {
    std::lock_guard lock(log_mutex);
    err << msg << '\n';
  };
  return o;
}

std::size_t require_level(const Args& a) {
  if (!a.level) throw InvalidArgument("--level is required");
  return *a.level;
}

fs::path single_run(const Args& a) {
  if (a.runs.size() != 1) throw InvalidArgument("exactly one --run directory is required");
  return a.runs.front();
}

// A multi-seed experiment directory holds seed_<s>/ sweeps; a plain sweep
// directory is its own single member.
std::vector<SweepResult> load_sweeps(const fs::path& dir) {
  if (fs::exists(dir / "config.json")) return {load_sweep(dir)};
  std::vector<fs::path> members;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && e.path().filename().string().rfind("seed_", 0) == 0 &&
          fs::exists(e.path() / "config.json")) {
        members.push_back(e.path());
      }
    }
  }
  if (members.empty()) throw MissingArtifact("no sweep found in " + dir.string());
  std::sort(members.begin(), members.end());
  std::vector<SweepResult> out;
  for (const auto& m : members) out.push_back(load_sweep(m));
  return out;
}

InterpScan read_interp(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact("missing interpolation scan " + path.string());
  const auto t = read_csv(path);
  InterpScan s;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    s.points.push_back({t.number(i, "alpha"), {t.number(i, "train_loss"), t.number(i, "train_acc")},
                        {t.number(i, "test_loss"), t.number(i, "test_acc")}});
  }
  return s;
}

LandscapeSlice read_slice(const fs::path& path) {
  const auto t = read_csv(path);
  LandscapeSlice s;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    s.offsets.push_back(t.number(i, "offset"));
    s.train_loss.push_back(t.number(i, "train_loss"));
  }
  return s;
}

int cmd_run(const Args& a, std::ostream& out, std::ostream& err) {
  const auto config = experiment_from_args(a.g);
  std::mutex m;
  const auto results = run_experiment(config, config.output_dir, run_options(a.g, err, m));
  int status = 0;
  for (const auto& r : results) {
    if (r.failure) {
      err << "error: sweep_failed: seed " << r.config.seed << " " << one_line(*r.failure) << '\n';
      status = 1;
    }
  }
  out << config.output_dir << '\n';
  return status;
}

int cmd_compare(const Args& a, std::ostream& out, std::ostream& err) {
  const auto config = experiment_from_args(a.g);
  std::mutex m;
  const auto cmp = run_reinit_compare(config, config.output_dir, run_options(a.g, err, m));
  out << (fs::path(config.output_dir) / "compare.csv").string() << '\n';
  for (const auto* s : {&cmp.lottery, &cmp.reinit}) {
    if (s->failure) {
      err << "error: sweep_failed: " << one_line(*s->failure) << '\n';
      return 1;
    }
  }
  return 0;
}

int cmd_diagnose(const std::string& what, const Args& a, std::ostream& out) {
  const auto dir = single_run(a);
  if (what == "distance") {
    const auto run = load_run(dir);
    const auto d = diagnose_distance(run);
    for (std::size_t i = 0; i < d.size(); ++i) out << i << ',' << format_decimal(d[i]) << '\n';
    return 0;
  }
  const auto level = require_level(a);
  if (what == "interp" && !fs::exists(redense_dir(dir, level) / "final.sdd")) {
    throw MissingArtifact("missing re-dense artifact for level " + std::to_string(level) +
                          " (run `diagnose redense --level " + std::to_string(level) + "` first)");
  }
  const auto run = load_run(dir);
  if (what == "redense") {
    const auto r = diagnose_redense(run, level);
    out << "lr " << format_decimal(r.lr) << " train_acc " << format_decimal(final_train(r.trace).accuracy)
        << " test_acc " << format_decimal(final_test(r.trace).accuracy) << '\n';
  } else if (what == "interp") {
    const auto s = diagnose_interp(run, level, a.step, std::max(1u, a.g.threads));
    out << (level_dir(dir, level) / "interp.csv").string() << ' ' << s.points.size() << " points\n";
  } else {
    const auto seed = a.direction_seed.value_or(derive_seed(run.config.seed, Stream::kSlice, level));
    diagnose_slice(run, level, a.target, seed, a.span, a.points, std::max(1u, a.g.threads));
    out << (level_dir(dir, level) / ("slice_" + a.target + ".csv")).string() << '\n';
  }
  return 0;
}

int cmd_phases(const Args& a, std::ostream& out) {
  const auto dir = single_run(a);
  const auto sweeps = load_sweeps(dir);
  std::size_t n = sweeps.front().levels.size();
  for (const auto& s : sweeps) n = std::min(n, s.levels.size());
  std::vector<LevelAccuracy> mean(n);
  std::vector<double> sparsity(n);
  for (const auto& s : sweeps) {
    const auto acc = level_accuracies(s);
    for (std::size_t i = 0; i < n; ++i) {
      mean[i].train_acc += acc[i].train_acc / static_cast<double>(sweeps.size());
      mean[i].test_acc += acc[i].test_acc / static_cast<double>(sweeps.size());
      sparsity[i] = s.levels[i].sparsity.prunable;
    }
  }
  const auto labels = classify_phases(mean, a.fit_fraction, a.dip_margin);
  std::vector<double> test(n);
  for (std::size_t i = 0; i < n; ++i) test[i] = mean[i].test_acc;
  const auto sig = dd_signature(test, sparsity, a.collapse_margin);

  nlohmann::ordered_json j;
  j["seeds"] = sweeps.size();
  j["threshold"] = labels.threshold ? nlohmann::ordered_json(*labels.threshold) : nlohmann::ordered_json(nullptr);
  auto& levels = j["levels"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    levels.push_back({{"level", i},
                      {"sparsity_prunable", sparsity[i]},
                      {"train_acc", mean[i].train_acc},
                      {"test_acc", mean[i].test_acc},
                      {"phase", labels.phases[i] ? to_string(*labels.phases[i]) : "none"}});
  }
  if (sig) {
    j["signature"] = {{"dip", sig->dip}, {"peak", sig->peak}, {"collapse", sig->collapse}};
  } else {
    j["signature"] = nullptr;
  }
  const auto text = j.dump(2) + "\n";
  write_text_atomic(dir / "phases.json", text);
  out << text;
  return 0;
}

int cmd_plot(const Args& a, std::ostream& out) {
  if (a.runs.empty()) throw InvalidArgument("plot needs at least one --run");
  if (a.g.out.empty()) throw InvalidArgument("plot needs --out <file.svg>");
  if (a.axis != "log" && a.axis != "linear") throw InvalidArgument("--axis must be 'log' or 'linear'");
  const auto axis = a.axis == "log" ? SparsityAxis::kLogRemaining : SparsityAxis::kLinear;
  Chart chart;
  if (a.kind == "accuracy") {
    std::vector<std::pair<std::string, SweepResult>> sweeps;
    for (const auto& r : a.runs) {
      auto loaded = load_sweeps(r);
      std::string label = a.runs.size() > 1 ? fs::path(r).lexically_normal().filename().string() : "";
      if (label.empty() && a.runs.size() > 1) label = fs::path(r).lexically_normal().parent_path().filename().string();
      for (std::size_t i = 0; i < loaded.size(); ++i) {
        std::string l = label;
        if (loaded.size() > 1) l += (l.empty() ? "" : " ") + std::string("seed ") + std::to_string(loaded[i].config.seed);
        sweeps.emplace_back(l, std::move(loaded[i]));
      }
    }
    chart = accuracy_chart(sweeps, axis);
  } else if (a.kind == "distance") {
    chart = distance_chart(load_sweeps(single_run(a)).front(), axis);
  } else if (a.kind == "interp") {
    chart = interp_chart(read_interp(level_dir(single_run(a), require_level(a)) / "interp.csv"));
  } else if (a.kind == "slice") {
    const auto ld = level_dir(single_run(a), require_level(a));
    std::vector<std::pair<std::string, LandscapeSlice>> slices;
    for (const std::string t : {"sparse", "redense"}) {
      if (fs::exists(ld / ("slice_" + t + ".csv"))) slices.emplace_back(t, read_slice(ld / ("slice_" + t + ".csv")));
    }
    if (slices.empty()) throw MissingArtifact("no slice CSVs in " + ld.string());
    chart = slice_chart(slices);
  } else {
    throw InvalidArgument("unknown plot kind '" + a.kind + "'");
  }
  write_svg(chart, a.g.out);
  out << a.g.out << '\n';
  return 0;
}

int cmd_noise_gen(const Args& a, std::ostream& out) {
  if (a.g.config.empty()) throw InvalidArgument("--config is required");
  ExperimentConfig c = load_config(a.g.config);
  if (a.g.seed) c.seed = *a.g.seed;
  c.validate();
  const auto csv = labels_csv(prepare_data(c, c.seed).train);
  if (a.g.out.empty()) {
    out << csv;
  } else {
    write_text_atomic(a.g.out, csv);
    out << a.g.out << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse double descent experiments", "sddlab"};
  app.require_subcommand(1);
  Args a;

  auto add_globals = [&a](CLI::App* cmd) {
    cmd->add_option("--config", a.g.config, "Experiment config (JSON)");
    cmd->add_option("--out", a.g.out, "Output directory or file");
    cmd->add_option("--seed", a.g.seed, "Override the base seed");
    cmd->add_option("--levels", a.g.levels, "Override the number of pruning levels");
    cmd->add_option("--threads", a.g.threads, "Worker threads for independent work")->check(CLI::PositiveNumber);
  };
  add_globals(&app);

  auto* run = app.add_subcommand("run", "Dense training and the pruning sweep");
  auto* cmp = app.add_subcommand("compare-reinit", "Lottery-rewind sweep against per-level re-initialization");
  auto* diag = app.add_subcommand("diagnose", "Diagnostics on a finished sweep directory");
  diag->require_subcommand(1);
  auto* d_distance = diag->add_subcommand("distance", "Learning distance per level");
  auto* d_redense = diag->add_subcommand("redense", "Re-dense training from a level");
  auto* d_interp = diag->add_subcommand("interp", "Sparse to re-dense interpolation scan");
  auto* d_slice = diag->add_subcommand("slice", "Filter-normalized 1-D loss slice");
  auto* phases = app.add_subcommand("phases", "Phase labels and double-descent signature");
  auto* plot = app.add_subcommand("plot", "SVG charts");
  auto* noise = app.add_subcommand("noise-gen", "Write the corrupted label vector of a config");

  for (auto* c : {run, cmp, diag, d_distance, d_redense, d_interp, d_slice, phases, plot, noise}) add_globals(c);
  for (auto* c : {d_distance, d_redense, d_interp, d_slice, phases, plot}) {
    c->add_option("--run", a.runs, "Sweep directory");
  }
  for (auto* c : {d_redense, d_interp, d_slice, plot}) c->add_option("--level", a.level, "Level index");
  d_interp->add_option("--step", a.step, "Grid step in alpha");
  d_slice->add_option("--target", a.target, "sparse or redense")->check(CLI::IsMember({"sparse", "redense"}));
  d_slice->add_option("--direction-seed", a.direction_seed, "Seed of the random direction");
  d_slice->add_option("--span", a.span, "Offsets cover [-span, span]");
  d_slice->add_option("--points", a.points, "Number of offsets (odd)");
  phases->add_option("--fit-fraction", a.fit_fraction, "Train-accuracy fraction of dense that counts as fitting");
  phases->add_option("--dip-margin", a.dip_margin, "Test-accuracy margin around the dense model");
  phases->add_option("--collapse-margin", a.collapse_margin, "Drop below the peak that counts as collapse");
  plot->add_option("--kind", a.kind, "accuracy, distance, interp or slice");
  plot->add_option("--axis", a.axis, "Sparsity axis: log (remaining weights) or linear");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*run) return cmd_run(a, out, err);
    if (*cmp) return cmd_compare(a, out, err);
    if (*phases) return cmd_phases(a, out);
    if (*plot) return cmd_plot(a, out);
    if (*noise) return cmd_noise_gen(a, out);
    for (auto* d : {d_distance, d_redense, d_interp, d_slice}) {
      if (*d) return cmd_diagnose(d->get_name(), a, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace sdd
