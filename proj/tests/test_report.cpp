#include <cmath>

#include "doctest.h"
#include "sdd/errors.hpp"
#include "sdd/report.hpp"
#include "support.hpp"

using namespace sdd;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

// Small hand-built sweep; no training needed for reporting.
SweepResult fake_sweep(std::uint64_t seed, double shift) {
  SweepResult s;
  s.config = testing::tiny_config();
  s.config.seed = seed;
  for (std::size_t l = 0; l < 4; ++l) {
    LevelResult r;
    r.level = l;
    r.seed = seed;
    r.sparsity.prunable = 1.0 - std::pow(0.8, static_cast<double>(l));
    r.sparsity.total = r.sparsity.prunable * 0.9;
    r.sparsity.surviving = 100 - 20 * l;
    r.learning_distance = 1.0 + static_cast<double>(l);
    EpochRecord e;
    e.epoch = 0;
    e.lr = 0.1;
    e.train = {0.5, 0.9 - 0.1 * static_cast<double>(l) + shift};
    e.test = {0.7, 0.6 + shift};
    r.trace.epochs.push_back(e);
    r.trace.best_test_acc = e.test.accuracy;
    s.levels.push_back(r);
  }
  return s;
}

}  // namespace

TEST_CASE("decimal formatting") {
  CHECK(format_decimal(0.5) == "0.5");
  CHECK(format_decimal(1.0 / 3.0) == "0.333333");
  CHECK(format_decimal(std::nan("")) == "nan");
}

TEST_CASE("sweep csv has one row per level and a consistent generalization gap") {
  const auto s = fake_sweep(3, 0.0);
  const auto table = parse_csv(sweep_csv(s));
  CHECK(table.header == sweep_csv_columns());
  REQUIRE(table.rows.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(table.number(r, "level") == static_cast<double>(r));
    CHECK(table.number(r, "gen_gap") ==
          doctest::Approx(table.number(r, "final_train_acc") - table.number(r, "final_test_acc")).epsilon(1e-5));
    CHECK(table.number(r, "seed") == 3.0);
  }
  CHECK_THROWS_AS(table.column("nope"), FormatError);
}

TEST_CASE("aggregate uses the sample standard deviation") {
  const auto table = parse_csv(aggregate_csv({fake_sweep(1, 0.0), fake_sweep(2, 0.1)}));
  REQUIRE(table.rows.size() == 4);
  CHECK(table.number(0, "seeds") == 2.0);
  CHECK(table.number(0, "test_acc_mean") == doctest::Approx(0.65));
  // sd of {0.6, 0.7} with n - 1 in the denominator
  CHECK(table.number(0, "test_acc_sd") == doctest::Approx(std::sqrt(0.005)).epsilon(1e-5));
}

TEST_CASE("csv files round-trip through disk") {
  testing::TempDir tmp("csv");
  const auto s = fake_sweep(1, 0.0);
  emit_csv(s, tmp / "sweep.csv");
  const auto t = read_csv(tmp / "sweep.csv");
  CHECK(t.rows.size() == 4);
  CHECK(t.number(2, "learning_distance") == 3.0);
  CHECK_THROWS(read_csv(tmp / "missing.csv"));
}

TEST_CASE("accuracy chart draws train and test per sweep") {
  const auto one = render_svg(accuracy_chart({{"lottery", fake_sweep(1, 0.0)}}));
  CHECK(count(one, "class=\"series\"") == 2);
  CHECK(count(one, "class=\"legend-entry\"") == 2);
  CHECK(count(one, "stroke-dasharray") >= 1);
  CHECK(one.find("y2-axis") == std::string::npos);
  const auto two = render_svg(accuracy_chart({{"a", fake_sweep(1, 0.0)}, {"b", fake_sweep(2, 0.1)}}));
  CHECK(count(two, "class=\"series\"") == 4);
}

TEST_CASE("distance chart puts test accuracy on a second axis") {
  const auto chart = distance_chart(fake_sweep(1, 0.0));
  REQUIRE(chart.series.size() == 2);
  CHECK(!chart.series[0].right_axis);
  CHECK(chart.series[1].right_axis);
  const auto svg = render_svg(chart);
  CHECK(svg.find("y2-axis") != std::string::npos);
  CHECK(svg.rfind("</svg>") != std::string::npos);
}

TEST_CASE("log sparsity axis maps remaining fraction") {
  const auto chart = accuracy_chart({{"x", fake_sweep(1, 0.0)}}, SparsityAxis::kLogRemaining);
  // x = -log10(1 - s) = -log10(0.8^l)
  CHECK(chart.series[0].x[2] == doctest::Approx(-2.0 * std::log10(0.8)));
  const auto lin = accuracy_chart({{"x", fake_sweep(1, 0.0)}}, SparsityAxis::kLinear);
  CHECK(lin.series[0].x[2] == doctest::Approx(36.0));
}

TEST_CASE("interp and slice csvs") {
  InterpScan scan;
  scan.points.push_back({0.0, {1.0, 0.5}, {1.2, 0.4}});
  scan.points.push_back({1.0, {0.2, 0.9}, {0.9, 0.6}});
  const auto t = parse_csv(interp_csv(scan));
  CHECK(t.header == std::vector<std::string>{"alpha", "train_loss", "train_acc", "test_loss", "test_acc"});
  CHECK(t.number(1, "test_acc") == 0.6);
  CHECK(count(render_svg(interp_chart(scan)), "class=\"series\"") == 4);

  LandscapeSlice sl{{-1.0, 0.0, 1.0}, {2.0, 1.0, 3.0}, 4};
  const auto st = parse_csv(slice_csv(sl));
  CHECK(st.rows.size() == 3);
  CHECK(st.number(2, "train_loss") == 3.0);
}
