#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "annoteval/bootstrap.hpp"
#include "annoteval/io.hpp"
#include "annoteval/metrics.hpp"

// Report renderers. The structured JSON report keeps full precision; the
// markdown table rounds the way the results table is usually presented
// (scores to 3 decimals, CI half-widths to 3 significant digits, percentages
// to 1 decimal). Rendering never touches clocks, so outputs are diffable.

namespace annoteval {

inline std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string fmt_sig(double v, int sig) {
  if (v == 0.0) return fmt_fixed(0.0, sig - 1);
  const double av = std::fabs(v);
  const int exp = static_cast<int>(std::floor(std::log10(av)));
  int decimals = sig - 1 - exp;
  if (decimals < 0) decimals = 0;
  if (decimals > 30) decimals = 30;
  return fmt_fixed(v, decimals);
}

/// Shortest round-trip decimal form (what the JSON writer emits).
inline std::string fmt_full(double v) { return nlohmann::json(v).dump(); }

inline std::string render_markdown_report(const EvaluationReport& r) {
  std::string md;
  md += "# Evaluation report\n\n";
  md += "Matching contract: maximum-cardinality one-to-one overlap matching; ties broken by "
        "total overlap, then lexicographically smallest pair list.\n\n";
  md += "Config: `" + r.config_fingerprint + "`\n\n";
  auto pm = [&](const char* name, double value, const ConfidenceInterval& ci) {
    md += "| ";
    md += name;
    md += " | " + fmt_fixed(value, 3) + " ± " + fmt_sig(ci.half_width(), 3) + " |\n";
  };
  md += "| metric | value |\n| --- | --- |\n";
  md += "| # texts | " + std::to_string(r.scores.size()) + " |\n";
  md += "| # gold errors | " + std::to_string(r.total_gold) + " |\n";
  md += "| # pred. errors | " + std::to_string(r.total_pred) + " |\n";
  pm("precision", r.macro_precision, r.ci_precision);
  pm("recall", r.macro_recall, r.ci_recall);
  pm("F1", r.macro_f1, r.ci_f1);
  md += "| % correctly labeled | " + fmt_fixed(r.pct_correctly_labeled * 100.0, 1) + " % |\n";
  md += "| false errors per text (mean, min–max) | " + fmt_fixed(r.false_error_mean_per_doc, 2) +
        " (" + std::to_string(r.false_error_min) + "–" + std::to_string(r.false_error_max) +
        ") |\n";
  md += "| false errors (% of predicted) | " + fmt_fixed(r.false_error_pct_of_pred * 100.0, 1) +
        " % |\n";

  std::vector<std::string> notes;
  for (const auto& f : r.flags) notes.push_back(f);
  auto ci_note = [&](const char* name, const ConfidenceInterval& ci) {
    if (!ci.warning.empty())
      notes.push_back(std::string(name) + " CI: " + ci.warning + " (" + ci.method_name() + ")");
    else if (ci.method == ConfidenceInterval::Method::percentile_fallback)
      notes.push_back(std::string(name) + " CI: percentile fallback");
  };
  ci_note("precision", r.ci_precision);
  ci_note("recall", r.ci_recall);
  ci_note("F1", r.ci_f1);
  if (!notes.empty()) {
    md += "\nNotes:\n";
    for (const auto& n : notes) md += "- " + n + "\n";
  }
  return md;
}

inline std::string render_csv_report(const EvaluationReport& r) {
  std::string csv = "doc_id,n_gold,n_pred,n_matched,n_label_correct,n_false,precision,recall,f1\n";
  for (const auto& s : r.scores) {
    csv += s.doc_id + "," + std::to_string(s.n_gold) + "," + std::to_string(s.n_pred) + "," +
           std::to_string(s.n_matched) + "," + std::to_string(s.n_label_correct) + "," +
           std::to_string(s.n_false) + "," + fmt_full(s.precision) + "," + fmt_full(s.recall) +
           "," + fmt_full(s.f1) + "\n";
  }
  return csv;
}

namespace detail {

struct BoxStats {
  double lo, q1, med, q3, hi;
};

inline BoxStats box_stats(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {v.front(), quantile_sorted(v, 0.25), quantile_sorted(v, 0.5),
          quantile_sorted(v, 0.75), v.back()};
}

}  // namespace detail

/// Per-document score distributions as one box plot per metric, SVG.
inline std::string render_svg_report(const EvaluationReport& r) {
  const double width = 420.0, height = 280.0;
  const double top = 24.0, bottom = 36.0, left = 48.0;
  const double plot_h = height - top - bottom;
  auto y = [&](double v) { return top + (1.0 - v) * plot_h; };
  auto num = [](double v) { return fmt_fixed(v, 1); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
       num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  s += "<style>text{font:11px sans-serif;}line,rect{stroke:#333;fill:none;}</style>\n";

  // y axis with ticks at 0, 0.25, ..., 1
  s += "<line x1=\"" + num(left) + "\" y1=\"" + num(y(0)) + "\" x2=\"" + num(left) + "\" y2=\"" +
       num(y(1)) + "\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = 0.25 * i;
    s += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(y(v)) + "\" x2=\"" + num(left) +
         "\" y2=\"" + num(y(v)) + "\"/>\n";
    s += "<text x=\"" + num(left - 8) + "\" y=\"" + num(y(v) + 4) +
         "\" text-anchor=\"end\">" + fmt_fixed(v, 2) + "</text>\n";
  }

  const char* names[3] = {"precision", "recall", "F1"};
  for (int m = 0; m < 3; ++m) {
    std::vector<double> vals;
    for (const auto& d : r.scores)
      vals.push_back(m == 0 ? d.precision : m == 1 ? d.recall : d.f1);
    detail::BoxStats b = detail::box_stats(std::move(vals));
    const double cx = left + 60.0 + 110.0 * m;
    const double hw = 26.0;
    auto vline = [&](double x1, double y1, double x2, double y2) {
      s += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
           num(y2) + "\"/>\n";
    };
    vline(cx, y(b.lo), cx, y(b.q1));
    vline(cx, y(b.q3), cx, y(b.hi));
    vline(cx - hw / 2, y(b.lo), cx + hw / 2, y(b.lo));
    vline(cx - hw / 2, y(b.hi), cx + hw / 2, y(b.hi));
    s += "<rect x=\"" + num(cx - hw) + "\" y=\"" + num(y(b.q3)) + "\" width=\"" + num(2 * hw) +
         "\" height=\"" + num(y(b.q1) - y(b.q3)) + "\"/>\n";
    vline(cx - hw, y(b.med), cx + hw, y(b.med));
    s += "<text x=\"" + num(cx) + "\" y=\"" + num(height - 12.0) +
         "\" text-anchor=\"middle\">" + names[m] + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

/// Write the requested report files under out_dir. Known formats: json, md,
/// csv, svg. Returns the paths written, in a fixed order.
inline std::vector<std::filesystem::path> write_report_files(
    const EvaluationReport& report, const std::filesystem::path& out_dir,
    const std::set<std::string>& formats) {
  std::vector<std::filesystem::path> written;
  auto want = [&](const char* f) { return formats.empty() || formats.count(f); };
  if (want("json")) {
    auto p = out_dir / "report.json";
    write_file(p, report_to_json(report).dump(2) + "\n");
    written.push_back(p);
  }
  if (want("md")) {
    auto p = out_dir / "report.md";
    write_file(p, render_markdown_report(report));
    written.push_back(p);
  }
  if (want("csv")) {
    auto p = out_dir / "report.csv";
    write_file(p, render_csv_report(report));
    written.push_back(p);
  }
  if (want("svg")) {
    auto p = out_dir / "report.svg";
    write_file(p, render_svg_report(report));
    written.push_back(p);
  }
  return written;
}

}  // namespace annoteval
