#include "osb/report/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "osb/core/error.hpp"

namespace osb::report {

namespace fs = std::filesystem;
using sweep::AggregateRow;

std::string to_string(Family f) {
  switch (f) {
    case Family::score_bars: return "score_bars";
    case Family::train_val_curves: return "train_val_curves";
    case Family::score_plus_val_curves: return "score_plus_val_curves";
    case Family::val_compare: return "val_compare";
  }
  return "?";
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> f = {Family::score_bars, Family::train_val_curves,
                                        Family::score_plus_val_curves, Family::val_compare};
  return f;
}

Family parse_family(const std::string& text) {
  for (auto f : all_families()) {
    if (to_string(f) == text) return f;
  }
  throw ValidationError("unknown report family '" + text +
                        "' (valid: score_bars, train_val_curves, score_plus_val_curves, val_compare)");
}

namespace {

std::vector<sweep::RunMetrics> select(const ReportSpec& spec, const std::vector<sweep::RunMetrics>& runs) {
  std::vector<sweep::RunMetrics> out;
  for (const auto& r : runs) {
    const std::string algo = algo::to_string(r.record.algorithm);
    if (!spec.algorithms.empty() &&
        std::find(spec.algorithms.begin(), spec.algorithms.end(), algo) == spec.algorithms.end()) {
      continue;
    }
    if (!spec.dataset_sizes.empty() && std::find(spec.dataset_sizes.begin(), spec.dataset_sizes.end(),
                                                 r.record.dataset_size) == spec.dataset_sizes.end()) {
      continue;
    }
    out.push_back(r);
  }
  if (out.empty()) throw ValidationError("report selection matches no done runs");
  return out;
}

void append(std::vector<AggregateRow>& out, std::vector<AggregateRow> rows) {
  out.insert(out.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
}

}  // namespace

std::vector<AggregateRow> report_rows(const ReportSpec& spec, const std::vector<sweep::RunMetrics>& all) {
  auto runs = select(spec, all);
  std::vector<AggregateRow> out;
  switch (spec.family) {
    case Family::score_bars: {
      for (auto& row : sweep::aggregate(runs, "normalized_score")) {
        // Keep the last evaluated update per (algorithm, size).
        if (!out.empty() && out.back().algorithm == row.algorithm && out.back().dataset_size == row.dataset_size) {
          out.back() = row;
        } else {
          out.push_back(row);
        }
      }
      break;
    }
    case Family::train_val_curves:
      append(out, sweep::aggregate(runs, "train_mse"));
      append(out, sweep::aggregate(runs, "val_mse"));
      break;
    case Family::score_plus_val_curves:
      append(out, sweep::aggregate(runs, "normalized_score"));
      append(out, sweep::aggregate(runs, "val_mse"));
      break;
    case Family::val_compare: {
      std::int64_t size = 0;
      if (spec.compare_size) {
        size = *spec.compare_size;
      } else {
        size = runs.front().record.dataset_size;
        for (const auto& r : runs) size = std::min(size, r.record.dataset_size);
      }
      std::vector<sweep::RunMetrics> at;
      for (const auto& r : runs) {
        if (r.record.dataset_size == size) at.push_back(r);
      }
      if (at.empty()) throw ValidationError(fmt::format("no done runs at dataset size {}", size));
      append(out, sweep::aggregate(at, "val_mse"));
      break;
    }
  }
  return out;
}

std::string render_table(Family, const std::vector<AggregateRow>& rows) {
  std::string out = "algorithm,dataset_size,series,update_index,mean,band_low,band_high,n_seeds\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.algorithm, r.dataset_size, r.metric, r.update_index,
                       r.mean, r.band_low, r.band_high, r.n_seeds);
  }
  return out;
}

namespace {

// Minimal SVG plotting: panels with axes, banded lines and grouped bars.
struct Canvas {
  std::string body;
  double width = 0, height = 0;
  void add(const std::string& s) { body += s + "\n"; }
  std::string finish() const {
    return fmt::format(
               "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
               "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
               width, height) +
           body + "</svg>\n";
  }
};

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};

std::string color_for(const std::string& series, std::size_t index) {
  if (series == "train_mse") return "#ff7f0e";  // train orange
  if (series == "val_mse") return "#1f77b4";    // validation blue
  if (series == "normalized_score") return "#2ca02c";
  return kPalette[index % std::size(kPalette)];
}

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

struct Panel {
  double x0, y0, w, h;  // pixel box
  double xmin, xmax, ymin, ymax;
  bool logy = false;

  double px(double x) const { return x0 + (xmax > xmin ? (x - xmin) / (xmax - xmin) : 0.5) * w; }
  double py(double y) const {
    double a = y, lo = ymin, hi = ymax;
    if (logy) {
      a = std::log10(std::max(y, 1e-12));
      lo = std::log10(std::max(ymin, 1e-12));
      hi = std::log10(std::max(ymax, 1e-12));
    }
    return y0 + h - (hi > lo ? (a - lo) / (hi - lo) : 0.5) * h;
  }
};

void draw_axes(Canvas& c, const Panel& p, const std::string& title, const std::string& ylabel,
               bool x_ticks = true) {
  c.add(fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#444\"/>",
                    p.x0, p.y0, p.w, p.h));
  c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" font-size=\"12\">{}</text>",
                    p.x0 + p.w / 2, p.y0 - 8, esc(title)));
  c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 {:.1f} {:.1f})\">{}</text>",
                    p.x0 - 44, p.y0 + p.h / 2, p.x0 - 44, p.y0 + p.h / 2, esc(ylabel)));
  for (int i = 0; i <= 4; ++i) {
    double yv;
    if (p.logy) {
      const double lo = std::log10(std::max(p.ymin, 1e-12)), hi = std::log10(std::max(p.ymax, 1e-12));
      yv = std::pow(10.0, lo + (hi - lo) * i / 4.0);
    } else {
      yv = p.ymin + (p.ymax - p.ymin) * i / 4.0;
    }
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>", p.x0 - 4, p.py(yv) + 4, yv));
    if (!x_ticks) continue;
    const double xv = p.xmin + (p.xmax - p.xmin) * i / 4.0;
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>", p.px(xv),
                      p.y0 + p.h + 14, xv));
  }
}

void draw_series(Canvas& c, const Panel& p, const std::vector<const AggregateRow*>& pts, const std::string& color) {
  if (pts.empty()) return;
  std::string band, line;
  for (const auto* r : pts) band += fmt::format("{:.1f},{:.1f} ", p.px(r->update_index), p.py(r->band_high));
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    band += fmt::format("{:.1f},{:.1f} ", p.px((*it)->update_index), p.py((*it)->band_low));
  }
  for (const auto* r : pts) line += fmt::format("{:.1f},{:.1f} ", p.px(r->update_index), p.py(r->mean));
  c.add(fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>", band, color));
  c.add(fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>", line, color));
}

using Key = std::pair<std::string, std::int64_t>;

std::string curves_svg(Family family, const std::vector<AggregateRow>& rows) {
  // One panel per (algorithm, size) for the per-run families; one panel total for val_compare.
  std::vector<std::string> panel_keys;
  std::map<std::string, std::map<std::string, std::vector<const AggregateRow*>>> grouped;  // panel -> series -> pts
  std::map<std::string, std::string> panel_metric;
  for (const auto& r : rows) {
    std::string pk;
    std::string sk;
    if (family == Family::val_compare) {
      pk = fmt::format("val_mse at size {}", r.dataset_size);
      sk = r.algorithm;
    } else if (family == Family::score_plus_val_curves) {
      pk = fmt::format("{} n={} {}", r.algorithm, r.dataset_size, r.metric);
      sk = r.metric;
    } else {
      pk = fmt::format("{} n={}", r.algorithm, r.dataset_size);
      sk = r.metric;
    }
    if (!grouped.count(pk)) panel_keys.push_back(pk);
    grouped[pk][sk].push_back(&r);
    panel_metric[pk] = r.metric;
  }
  if (family == Family::score_plus_val_curves) {
    // Pair score and val panels of the same run group side by side.
    std::stable_sort(panel_keys.begin(), panel_keys.end(), [&](const std::string& a, const std::string& b) {
      auto stem = [](const std::string& s) { return s.substr(0, s.rfind(' ')); };
      return stem(a) < stem(b);
    });
  }
  const int cols = family == Family::val_compare ? 1 : (family == Family::score_plus_val_curves ? 2 : 3);
  const double pw = 300, ph = 180, mx = 70, my = 40;
  const int nrows = static_cast<int>((panel_keys.size() + cols - 1) / cols);
  Canvas c;
  c.width = cols * (pw + mx) + 140;
  c.height = nrows * (ph + my + 20) + 20;
  for (std::size_t i = 0; i < panel_keys.size(); ++i) {
    const auto& pk = panel_keys[i];
    const auto& series = grouped[pk];
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& [name, pts] : series) {
      for (const auto* r : pts) {
        xmin = std::min<double>(xmin, r->update_index);
        xmax = std::max<double>(xmax, r->update_index);
        ymin = std::min(ymin, r->band_low);
        ymax = std::max(ymax, r->band_high);
      }
    }
    const bool logy = panel_metric[pk] != "normalized_score" && ymin > 0;
    if (!logy && ymin == ymax) { ymin -= 1; ymax += 1; }
    Panel p{mx + (i % cols) * (pw + mx), my + (i / cols) * (ph + my + 20), pw, ph, xmin, xmax, ymin, ymax, logy};
    const std::string ylabel = family == Family::train_val_curves ? "action MSE" : panel_metric[pk];
    draw_axes(c, p, pk, ylabel);
    std::size_t k = 0;
    for (const auto& [name, pts] : series) {
      draw_series(c, p, pts,
                  family == Family::val_compare ? kPalette[k % std::size(kPalette)] : color_for(name, k));
      ++k;
    }
  }
  // Legend.
  std::set<std::string> names;
  std::vector<std::string> order;
  for (const auto& pk : panel_keys) {
    for (const auto& [name, pts] : grouped[pk]) {
      if (names.insert(name).second) order.push_back(name);
    }
  }
  const double lx = cols * (pw + mx) + 10;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::string color = family == Family::val_compare ? kPalette[k % std::size(kPalette)] : color_for(order[k], k);
    c.add(fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"12\" height=\"12\" fill=\"{}\"/>", lx, my + 18.0 * k, color));
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>", lx + 16, my + 18.0 * k + 10, esc(order[k])));
  }
  return c.finish();
}

std::string bars_svg(const std::vector<AggregateRow>& rows) {
  std::vector<std::string> algos;
  std::vector<std::int64_t> sizes;
  for (const auto& r : rows) {
    if (std::find(algos.begin(), algos.end(), r.algorithm) == algos.end()) algos.push_back(r.algorithm);
    if (std::find(sizes.begin(), sizes.end(), r.dataset_size) == sizes.end()) sizes.push_back(r.dataset_size);
  }
  double ymin = 0, ymax = 100;
  for (const auto& r : rows) {
    ymin = std::min(ymin, r.band_low);
    ymax = std::max(ymax, r.band_high);
  }
  const double group_w = 40.0 * sizes.size() + 30;
  Canvas c;
  c.width = 90 + group_w * algos.size() + 140;
  c.height = 300;
  Panel p{70, 30, group_w * algos.size(), 220, 0, 1, ymin, ymax, false};
  draw_axes(c, p, "final normalized score", "normalized score", false);
  c.add(fmt::format("<line x1=\"{:.1f}\" x2=\"{:.1f}\" y1=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#888\" stroke-dasharray=\"3,3\"/>",
                    p.x0, p.x0 + p.w, p.py(0), p.py(0)));
  for (const auto& r : rows) {
    const auto ai = std::find(algos.begin(), algos.end(), r.algorithm) - algos.begin();
    const auto si = std::find(sizes.begin(), sizes.end(), r.dataset_size) - sizes.begin();
    const double x = p.x0 + ai * group_w + 15 + si * 40.0;
    const double top = p.py(std::max(r.mean, 0.0)), bottom = p.py(std::min(r.mean, 0.0));
    c.add(fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"34\" height=\"{:.1f}\" fill=\"{}\"/>", x, top,
                      std::max(bottom - top, 0.5), kPalette[si % std::size(kPalette)]));
    c.add(fmt::format("<line x1=\"{0:.1f}\" x2=\"{0:.1f}\" y1=\"{1:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>", x + 17,
                      p.py(r.band_low), p.py(r.band_high)));
  }
  for (std::size_t a = 0; a < algos.size(); ++a) {
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>",
                      p.x0 + a * group_w + group_w / 2, p.y0 + p.h + 16, esc(algos[a])));
  }
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const double lx = p.x0 + p.w + 20;
    c.add(fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"12\" height=\"12\" fill=\"{}\"/>", lx, 30 + 18.0 * s,
                      kPalette[s % std::size(kPalette)]));
    c.add(fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">n={}</text>", lx + 16, 40 + 18.0 * s, sizes[s]));
  }
  return c.finish();
}

}  // namespace

std::string render_svg(Family family, const std::vector<AggregateRow>& rows) {
  if (family == Family::score_bars) return bars_svg(rows);
  return curves_svg(family, rows);
}

ReportFiles write_report(const ReportSpec& spec, const std::vector<sweep::RunMetrics>& runs) {
  const auto rows = report_rows(spec, runs);
  fs::create_directories(spec.output_dir);
  ReportFiles files;
  files.table = spec.output_dir / (to_string(spec.family) + ".csv");
  files.table_rows = rows.size();
  {
    std::ofstream out(files.table, std::ios::trunc | std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + files.table.string());
    out << render_table(spec.family, rows);
  }
  if (spec.write_svg) {
    files.image = spec.output_dir / (to_string(spec.family) + ".svg");
    std::ofstream out(*files.image, std::ios::trunc | std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + files.image->string());
    out << render_svg(spec.family, rows);
  }
  return files;
}

}  // namespace osb::report
