#include "doctest.h"
#include "sdd/checkpoint.hpp"
#include "sdd/errors.hpp"
#include "sdd/report.hpp"
#include "sdd/sweep.hpp"
#include "support.hpp"

using namespace sdd;
namespace fs = std::filesystem;

TEST_CASE("a sweep persists every level and follows the counting oracle") {
  testing::TempDir tmp("sweep");
  const auto cfg = testing::tiny_config(5, 2);
  const auto s = run_sweep(cfg, tmp.path());
  REQUIRE(!s.failure);
  REQUIRE(s.levels.size() == 6);
  std::size_t surviving = 384;
  for (std::size_t l = 0; l <= 5; ++l) {
    if (l > 0) surviving -= surviving / 5;
    CHECK(s.levels[l].sparsity.surviving == surviving);
    const auto dir = level_dir(tmp.path(), l);
    CHECK(fs::exists(dir / "trace.json"));
    CHECK(fs::exists(dir / "final.sdd"));
    CHECK(load_mask(dir / "mask.sdd") == s.levels[l].mask);
  }
  CHECK(fs::exists(tmp / "sweep.csv"));
  CHECK(fs::exists(tmp / "labels.csv"));
  CHECK(fs::exists(tmp / "config.json"));
  CHECK(read_csv(tmp / "sweep.csv").rows.size() == 6);
}

TEST_CASE("resuming reuses finished levels and reproduces the csv") {
  testing::TempDir tmp("resume");
  const auto cfg = testing::tiny_config(3, 2);
  run_sweep(cfg, tmp.path());
  const auto first = testing::slurp(tmp / "sweep.csv");
  fs::remove_all(level_dir(tmp.path(), 3));
  std::size_t steps = 0;
  RunOptions opts;
  opts.observer = [&](std::size_t, const ParamSet&) { ++steps; };
  run_sweep(cfg, tmp.path(), opts);
  CHECK(testing::slurp(tmp / "sweep.csv") == first);
  CHECK(steps == 2 * steps_per_epoch(240, 32));  // only level 3 was retrained

  auto other = cfg;
  other.train.epochs = 5;
  CHECK_THROWS_AS(run_sweep(other, tmp.path()), ConfigError);
}

TEST_CASE("load_run rebuilds the data and checks the labels") {
  testing::TempDir tmp("load");
  const auto cfg = testing::tiny_config(2, 1);
  const auto s = run_sweep(cfg, tmp.path());
  const auto run = load_run(tmp.path());
  CHECK(run.sweep.levels.size() == 3);
  CHECK(run.sweep.levels[2].trace.final_params == s.levels[2].trace.final_params);
  CHECK(run.data.train.dataset.labels == prepare_data(cfg, cfg.seed).train.dataset.labels);

  auto labels = testing::slurp(tmp / "labels.csv");
  const auto pos = labels.find("\n1,");
  REQUIRE(pos != std::string::npos);
  // Flip the noisy label of example 1 to some other class.
  const auto row_end = labels.find('\n', pos + 1);
  std::string row = labels.substr(pos + 1, row_end - pos - 1);
  const auto c1 = row.find(',');
  const auto c2 = row.find(',', c1 + 1);
  const int noisy = std::stoi(row.substr(c2 + 1));
  row = row.substr(0, c2 + 1) + std::to_string((noisy + 1) % 3) + row.substr(row.find(',', c2 + 1));
  labels.replace(pos + 1, row_end - pos - 1, row);
  std::ofstream(tmp / "labels.csv", std::ios::binary) << labels;
  try {
    load_run(tmp.path());
    FAIL("expected a label mismatch");
  } catch (const FormatError& e) {
    CHECK(e.code() == "label_mismatch");
  }
}

TEST_CASE("running out of weights stops the sweep but keeps earlier levels") {
  testing::TempDir tmp("exhaust");
  auto cfg = testing::tiny_config(40, 1);
  const auto s = run_sweep(cfg, tmp.path());
  REQUIRE(s.failure);
  CHECK(s.failure->find("mask_exhausted") != std::string::npos);
  CHECK(s.levels.back().sparsity.surviving < 5);
  CHECK(fs::exists(tmp / "failure.txt"));
  CHECK(read_csv(tmp / "sweep.csv").rows.size() == s.levels.size());
}

TEST_CASE("multi-seed experiments aggregate per level") {
  testing::TempDir tmp("multi");
  auto cfg = testing::tiny_config(2, 1);
  cfg.repeats = 2;
  const auto sweeps = run_experiment(cfg, tmp.path());
  REQUIRE(sweeps.size() == 2);
  CHECK(sweeps[1].config.seed == 8);
  CHECK(fs::exists(tmp / "seed_7" / "sweep.csv"));
  CHECK(fs::exists(tmp / "seed_8" / "sweep.csv"));
  const auto agg = read_csv(tmp / "aggregate.csv");
  CHECK(agg.rows.size() == 3);
  CHECK(agg.number(1, "seeds") == 2.0);
  CHECK(!(sweeps[0].levels[1].mask == sweeps[1].levels[1].mask));
}

TEST_CASE("the reinit arm reuses the lottery masks") {
  testing::TempDir tmp("reinit");
  auto cfg = testing::tiny_config(3, 2);
  cfg.method = Finetune{0.05};  // overridden: the comparison always rewinds
  const auto cmp = run_reinit_compare(cfg, tmp.path());
  REQUIRE(cmp.lottery.levels.size() == 4);
  REQUIRE(cmp.reinit.levels.size() == 4);
  for (std::size_t l = 0; l < 4; ++l) {
    CHECK(cmp.lottery.levels[l].mask == cmp.reinit.levels[l].mask);
    CHECK(testing::slurp(level_dir(tmp / "lottery", l) / "mask.sdd") ==
          testing::slurp(level_dir(tmp / "reinit", l) / "mask.sdd"));
  }
  CHECK(cmp.reinit.levels[0].trace.final_params == cmp.lottery.levels[0].trace.final_params);
  CHECK(!(cmp.reinit.levels[2].trace.final_params == cmp.lottery.levels[2].trace.final_params));
  const auto table = read_csv(tmp / "compare.csv");
  CHECK(table.rows.size() == 4);
  CHECK(table.number(3, "sparsity_prunable") == cmp.lottery.levels[3].sparsity.prunable);
}

TEST_CASE("diagnostics on a stored run") {
  testing::TempDir tmp("diag");
  const auto cfg = testing::tiny_config(2, 2);
  run_sweep(cfg, tmp.path());
  const auto run = load_run(tmp.path());
  CHECK_THROWS_AS(diagnose_interp(run, 1), MissingArtifact);
  const auto rd = diagnose_redense(run, 1);
  CHECK(rd.trace.initial_train.loss == doctest::Approx(run.sweep.levels[1].trace.epochs.back().train.loss));
  CHECK(rd.trace.epochs.size() == 2);
  const auto scan = diagnose_interp(run, 1, 0.25);
  CHECK(scan.points.size() == 5);
  CHECK(fs::exists(level_dir(tmp.path(), 1) / "interp.csv"));
  const auto sl = diagnose_slice(run, 1, "redense", 3, 1.0, 5);
  CHECK(sl.offsets.size() == 5);
  CHECK(fs::exists(level_dir(tmp.path(), 1) / "slice_redense.csv"));
  CHECK_THROWS(diagnose_slice(run, 1, "dense", 3));
  const auto d = diagnose_distance(run);
  REQUIRE(d.size() == 3);
  CHECK(d[2] == doctest::Approx(run.sweep.levels[2].learning_distance));
}
