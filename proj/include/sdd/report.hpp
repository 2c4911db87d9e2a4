#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sdd/diagnostics.hpp"
#include "sdd/sweep.hpp"

namespace sdd {

/// Six significant digits, "%.6g".
std::string format_decimal(double v);

inline const std::vector<std::string>& sweep_csv_columns() {
  static const std::vector<std::string> cols = {
      "level",          "sparsity_prunable", "sparsity_total",  "surviving_weights", "epochs_trained",
      "final_train_loss", "final_train_acc", "final_test_loss", "final_test_acc",    "best_test_acc",
      "best_test_epoch", "gen_gap",          "learning_distance", "seed"};
  return cols;
}

/// Last-epoch metrics, or the pre-training metrics for an empty trace.
Metrics final_train(const TrainTrace& t);
Metrics final_test(const TrainTrace& t);

std::string sweep_csv(const SweepResult& sweep);
void emit_csv(const SweepResult& sweep, const std::filesystem::path& path);

/// Per-level mean and sample standard deviation across seeds.
std::string aggregate_csv(const std::vector<SweepResult>& sweeps);
std::string compare_csv(const ReinitComparison& cmp);
std::string interp_csv(const InterpScan& scan);
std::string slice_csv(const LandscapeSlice& slice);
std::string trace_csv(const TrainTrace& trace);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// SVG charts
// ---------------------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool right_axis = false;
  bool dashed = false;
  std::string color;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string y2_label;  // set when any series uses the right axis
  std::vector<Series> series;
  /// Optional tick positions and labels for the x axis; evenly spaced
  /// numeric ticks otherwise.
  std::vector<std::pair<double, std::string>> x_ticks;
};

std::string render_svg(const Chart& chart);

enum class SparsityAxis { kLinear, kLogRemaining };

/// Train and test accuracy per level for each sweep (two series per sweep).
Chart accuracy_chart(const std::vector<std::pair<std::string, SweepResult>>& sweeps,
                     SparsityAxis axis = SparsityAxis::kLogRemaining);
/// Learning distance (left axis) and test accuracy (right axis).
Chart distance_chart(const SweepResult& sweep, SparsityAxis axis = SparsityAxis::kLogRemaining);
/// Loss (left axis) and accuracy (right axis) along the interpolation path.
Chart interp_chart(const InterpScan& scan);
Chart slice_chart(const std::vector<std::pair<std::string, LandscapeSlice>>& slices);

void write_svg(const Chart& chart, const std::filesystem::path& path);

}  // namespace sdd
