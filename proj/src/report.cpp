#include "sdd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "sdd/checkpoint.hpp"
#include "sdd/errors.hpp"

namespace sdd {

namespace fs = std::filesystem;

std::string format_decimal(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Metrics final_train(const TrainTrace& t) { return t.epochs.empty() ? t.initial_train : t.epochs.back().train; }
Metrics final_test(const TrainTrace& t) { return t.epochs.empty() ? t.initial_test : t.epochs.back().test; }

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out + "\n";
}

struct MeanStd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

}  // namespace

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = join(sweep_csv_columns());
  for (const auto& l : sweep.levels) {
    const auto tr = final_train(l.trace);
    const auto te = final_test(l.trace);
    out += join({std::to_string(l.level), format_decimal(l.sparsity.prunable), format_decimal(l.sparsity.total),
                 std::to_string(l.sparsity.surviving), std::to_string(l.trace.epochs.size()),
                 format_decimal(tr.loss), format_decimal(tr.accuracy), format_decimal(te.loss),
                 format_decimal(te.accuracy), format_decimal(l.trace.best_test_acc),
                 std::to_string(l.trace.best_test_epoch), format_decimal(tr.accuracy - te.accuracy),
                 format_decimal(l.learning_distance), std::to_string(l.seed)});
  }
  return out;
}

void emit_csv(const SweepResult& sweep, const fs::path& path) { write_text_atomic(path, sweep_csv(sweep)); }

std::string aggregate_csv(const std::vector<SweepResult>& sweeps) {
  std::string out = join({"level", "seeds", "sparsity_prunable", "train_acc_mean", "train_acc_sd", "test_acc_mean",
                          "test_acc_sd", "learning_distance_mean", "learning_distance_sd"});
  if (sweeps.empty()) return out;
  std::size_t n = std::numeric_limits<std::size_t>::max();
  for (const auto& s : sweeps) n = std::min(n, s.levels.size());
  for (std::size_t level = 0; level < n; ++level) {
    std::vector<double> tr, te, dist;
    for (const auto& s : sweeps) {
      tr.push_back(final_train(s.levels[level].trace).accuracy);
      te.push_back(final_test(s.levels[level].trace).accuracy);
      dist.push_back(s.levels[level].learning_distance);
    }
    const auto a = mean_std(tr), b = mean_std(te), c = mean_std(dist);
    out += join({std::to_string(level), std::to_string(sweeps.size()),
                 format_decimal(sweeps.front().levels[level].sparsity.prunable), format_decimal(a.mean),
                 format_decimal(a.sd), format_decimal(b.mean), format_decimal(b.sd), format_decimal(c.mean),
                 format_decimal(c.sd)});
  }
  return out;
}

std::string compare_csv(const ReinitComparison& cmp) {
  std::string out = join({"level", "sparsity_prunable", "lottery_train_acc", "lottery_test_acc", "reinit_train_acc",
                          "reinit_test_acc"});
  const auto n = std::min(cmp.lottery.levels.size(), cmp.reinit.levels.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = cmp.lottery.levels[i];
    const auto& b = cmp.reinit.levels[i];
    out += join({std::to_string(a.level), format_decimal(a.sparsity.prunable),
                 format_decimal(final_train(a.trace).accuracy), format_decimal(final_test(a.trace).accuracy),
                 format_decimal(final_train(b.trace).accuracy), format_decimal(final_test(b.trace).accuracy)});
  }
  return out;
}

std::string interp_csv(const InterpScan& scan) {
  std::string out = join({"alpha", "train_loss", "train_acc", "test_loss", "test_acc"});
  for (const auto& p : scan.points) {
    out += join({format_decimal(p.alpha), format_decimal(p.train.loss), format_decimal(p.train.accuracy),
                 format_decimal(p.test.loss), format_decimal(p.test.accuracy)});
  }
  return out;
}

std::string slice_csv(const LandscapeSlice& slice) {
  std::string out = join({"offset", "train_loss"});
  for (std::size_t i = 0; i < slice.offsets.size(); ++i) {
    out += join({format_decimal(slice.offsets[i]), format_decimal(slice.train_loss[i])});
  }
  return out;
}

std::string trace_csv(const TrainTrace& trace) {
  std::string out = join({"epoch", "lr", "train_loss", "train_acc", "test_loss", "test_acc"});
  for (const auto& e : trace.epochs) {
    out += join({std::to_string(e.epoch), format_decimal(e.lr), format_decimal(e.train.loss),
                 format_decimal(e.train.accuracy), format_decimal(e.test.loss), format_decimal(e.test.accuracy)});
  }
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw FormatError("csv", "no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  const auto& cell = rows.at(row).at(column(name));
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw FormatError("csv", "column '" + name + "' row " + std::to_string(row) + " is not a number: '" + cell + "'");
  }
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) {
        throw FormatError("csv", "row " + std::to_string(t.rows.size()) + " has " + std::to_string(cells.size()) +
                                     " cells, header has " + std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 760, kHeight = 460;
constexpr double kLeft = 70, kRight = 70, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.05, 0.5);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = (hi - lo) * 0.05;
      lo -= pad;
      hi += pad;
    }
  }
  double frac(double v) const { return (v - lo) / (hi - lo); }
};

}  // namespace

std::string render_svg(const Chart& chart) {
  Range xr, yl, yr;
  bool has_right = false;
  for (const auto& s : chart.series) {
    for (double x : s.x) xr.add(x);
    for (double y : s.y) (s.right_axis ? yr : yl).add(y);
    has_right = has_right || s.right_axis;
  }
  for (const auto& t : chart.x_ticks) xr.add(t.first);
  xr.finish();
  yl.finish();
  yr.finish();

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + xr.frac(x) * pw; };
  auto py = [&](const Range& r, double y) { return kTop + (1.0 - r.frac(y)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(chart.title)
    << "</text>\n";
  o << "<rect class=\"plot-area\" x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#333\"/>\n";

  // Ticks.
  o << "<g class=\"x-axis\">\n";
  std::vector<std::pair<double, std::string>> xt = chart.x_ticks;
  if (xt.empty()) {
    for (int i = 0; i <= 5; ++i) {
      const double v = xr.lo + (xr.hi - xr.lo) * i / 5.0;
      xt.emplace_back(v, format_decimal(std::round(v * 1000) / 1000));
    }
  }
  for (const auto& [v, label] : xt) {
    if (v < xr.lo || v > xr.hi) continue;
    o << "<line x1=\"" << num(px(v)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(px(v)) << "\" y2=\""
      << kTop + ph + 5 << "\" stroke=\"#333\"/><text x=\"" << num(px(v)) << "\" y=\"" << kTop + ph + 18
      << "\" text-anchor=\"middle\">" << esc(label) << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">"
    << esc(chart.x_label) << "</text>\n</g>\n";

  auto y_axis = [&](const Range& r, bool right, const std::string& label) {
    const double x0 = right ? kLeft + pw : kLeft;
    o << "<g class=\"" << (right ? "y2-axis" : "y-axis") << "\">\n";
    for (int i = 0; i <= 5; ++i) {
      const double v = r.lo + (r.hi - r.lo) * i / 5.0;
      const double y = py(r, v);
      o << "<line x1=\"" << x0 << "\" y1=\"" << num(y) << "\" x2=\"" << (right ? x0 + 5 : x0 - 5) << "\" y2=\""
        << num(y) << "\" stroke=\"#333\"/><text x=\"" << (right ? x0 + 8 : x0 - 8) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"" << (right ? "start" : "end") << "\">" << esc(format_decimal(std::round(v * 1000) / 1000))
        << "</text>\n";
    }
    const double lx = right ? kWidth - 14 : 16;
    o << "<text x=\"" << lx << "\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 " << lx
      << ' ' << kTop + ph / 2 << ")\">" << esc(label) << "</text>\n</g>\n";
  };
  y_axis(yl, false, chart.y_label);
  if (has_right) y_axis(yr, true, chart.y2_label);

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    const std::string color = s.color.empty() ? kPalette[i % std::size(kPalette)] : s.color;
    o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    const auto n = std::min(s.x.size(), s.y.size());
    bool first = true;
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      if (!first) o << ' ';
      first = false;
      o << num(px(s.x[k])) << ',' << num(py(s.right_axis ? yr : yl, s.y[k]));
    }
    o << "\"><title>" << esc(s.label) << "</title></polyline>\n";
  }

  o << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const auto& s = chart.series[i];
    const std::string color = s.color.empty() ? kPalette[i % std::size(kPalette)] : s.color;
    const double y = kTop + 14 + 16 * static_cast<double>(i);
    const double x = kLeft + 10;
    o << "<g class=\"legend-entry\"><line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 22 << "\" y2=\"" << y
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
      << "/><text x=\"" << x + 28 << "\" y=\"" << y + 4 << "\">" << esc(s.label) << (s.right_axis ? " (right)" : "")
      << "</text></g>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

namespace {

double sparsity_x(double s, SparsityAxis axis) {
  if (axis == SparsityAxis::kLinear) return 100.0 * s;
  return -std::log10(std::max(1.0 - s, 1e-12));
}

std::vector<std::pair<double, std::string>> sparsity_ticks(SparsityAxis axis) {
  if (axis == SparsityAxis::kLinear) return {};
  std::vector<std::pair<double, std::string>> ticks;
  for (double pct : {0.0, 50.0, 80.0, 90.0, 95.0, 98.0, 99.0, 99.5, 99.8, 99.9}) {
    ticks.emplace_back(sparsity_x(pct / 100.0, axis), format_decimal(pct) + "%");
  }
  return ticks;
}

std::string sparsity_label(SparsityAxis axis) {
  return axis == SparsityAxis::kLinear ? "sparsity (%)" : "sparsity (log remaining weights)";
}

}  // namespace

Chart accuracy_chart(const std::vector<std::pair<std::string, SweepResult>>& sweeps, SparsityAxis axis) {
  Chart c;
  c.title = "Accuracy by sparsity";
  c.x_label = sparsity_label(axis);
  c.y_label = "accuracy";
  c.x_ticks = sparsity_ticks(axis);
  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    const auto& [label, sweep] = sweeps[i];
    Series train{label.empty() ? "train" : label + " train", {}, {}, false, true, kPalette[i % std::size(kPalette)]};
    Series test{label.empty() ? "test" : label + " test", {}, {}, false, false, kPalette[i % std::size(kPalette)]};
    for (const auto& l : sweep.levels) {
      const double x = sparsity_x(l.sparsity.prunable, axis);
      train.x.push_back(x);
      train.y.push_back(final_train(l.trace).accuracy);
      test.x.push_back(x);
      test.y.push_back(final_test(l.trace).accuracy);
    }
    c.series.push_back(std::move(train));
    c.series.push_back(std::move(test));
  }
  return c;
}

Chart distance_chart(const SweepResult& sweep, SparsityAxis axis) {
  Chart c;
  c.title = "Learning distance and test accuracy";
  c.x_label = sparsity_label(axis);
  c.y_label = "learning distance";
  c.y2_label = "test accuracy";
  c.x_ticks = sparsity_ticks(axis);
  Series dist{"learning distance", {}, {}, false, false, kPalette[0]};
  Series acc{"test accuracy", {}, {}, true, true, kPalette[1]};
  for (const auto& l : sweep.levels) {
    const double x = sparsity_x(l.sparsity.prunable, axis);
    dist.x.push_back(x);
    dist.y.push_back(l.learning_distance);
    acc.x.push_back(x);
    acc.y.push_back(final_test(l.trace).accuracy);
  }
  c.series = {std::move(dist), std::move(acc)};
  return c;
}

Chart interp_chart(const InterpScan& scan) {
  Chart c;
  c.title = "Sparse to re-dense interpolation";
  c.x_label = "alpha";
  c.y_label = "loss";
  c.y2_label = "accuracy";
  Series trl{"train loss", {}, {}, false, false, kPalette[0]};
  Series tel{"test loss", {}, {}, false, false, kPalette[1]};
  Series tra{"train accuracy", {}, {}, true, true, kPalette[0]};
  Series tea{"test accuracy", {}, {}, true, true, kPalette[1]};
  for (const auto& p : scan.points) {
    for (auto* s : {&trl, &tel, &tra, &tea}) s->x.push_back(p.alpha);
    trl.y.push_back(p.train.loss);
    tel.y.push_back(p.test.loss);
    tra.y.push_back(p.train.accuracy);
    tea.y.push_back(p.test.accuracy);
  }
  c.series = {std::move(trl), std::move(tel), std::move(tra), std::move(tea)};
  return c;
}

Chart slice_chart(const std::vector<std::pair<std::string, LandscapeSlice>>& slices) {
  Chart c;
  c.title = "Train loss along a filter-normalized direction";
  c.x_label = "offset";
  c.y_label = "train loss";
  for (const auto& [label, s] : slices) c.series.push_back({label, s.offsets, s.train_loss, false, false, ""});
  return c;
}

void write_svg(const Chart& chart, const fs::path& path) { write_text_atomic(path, render_svg(chart)); }

}  // namespace sdd
