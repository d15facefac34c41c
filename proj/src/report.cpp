#include "vprobe/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace vprobe {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);  // no "-0.000000"
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string curve_csv(const std::vector<CurvePoint>& points) {
  std::string out = "series,param,mean,n,n_errors,ci_low,ci_high\n";
  for (const auto& p : points) {
    out += csv_field(p.series) + "," + format_double(p.param) + "," + format_double(p.mean_gpm) + "," +
           std::to_string(p.n) + "," + std::to_string(p.n_errors) + "," + format_double(p.ci_low) + "," +
           format_double(p.ci_high) + "\n";
  }
  return out;
}

std::string heatmap_csv(const std::vector<HeatmapCell>& cells) {
  std::string out = "row,col,mean,n,n_errors\n";
  for (const auto& c : cells) {
    out += std::to_string(c.row) + "," + std::to_string(c.col) + "," + format_double(c.mean_gpm) + "," +
           std::to_string(c.n) + "," + std::to_string(c.n_errors) + "\n";
  }
  return out;
}

std::string boundary_csv(const std::vector<BoundaryReport>& reports) {
  std::string out = "axis,view,bin_low,bin_high,mean,n,cut_fraction\n";
  for (const auto& r : reports) {
    const auto emit = [&](const char* view, const std::vector<BoundaryBin>& bins) {
      for (const auto& b : bins) {
        out += std::string(to_string(r.axis)) + "," + view + "," + format_double(b.index * r.bin_width) + "," +
               format_double((b.index + 1) * r.bin_width) + "," + format_double(b.mean_gpm) + "," +
               std::to_string(b.n) + "," + format_double(b.cut_fraction) + "\n";
      }
    };
    emit("full", r.full);
    emit("window", r.window);
  }
  return out;
}

std::string boundary_summary_csv(const std::vector<BoundaryReport>& reports) {
  std::string out = "axis,view,cut_mean,n_cut,uncut_mean,n_uncut\n";
  for (const auto& r : reports) {
    const auto emit = [&](const char* view, const BoundarySummary& s) {
      out += std::string(to_string(r.axis)) + "," + view + "," + format_double(s.cut_mean) + "," +
             std::to_string(s.n_cut) + "," + format_double(s.uncut_mean) + "," + std::to_string(s.n_uncut) + "\n";
    };
    emit("full", r.summary);
    emit("window", r.window_summary);
  }
  return out;
}

std::string quantile_csv(const std::vector<SliceBucket>& buckets) {
  std::string out =
      "bucket,n,key_min,key_max,area_min,area_max,pixels_min,pixels_max,mean_distractors,acc_inclusion,acc_exact,"
      "mean_gpm\n";
  for (const auto& b : buckets) {
    out += std::to_string(b.index) + "," + std::to_string(b.n) + "," + format_double(b.key_min) + "," +
           format_double(b.key_max) + "," + format_double(b.area_min) + "," + format_double(b.area_max) + "," +
           std::to_string(b.pixels_min) + "," + std::to_string(b.pixels_max) + "," +
           format_double(b.mean_distractors) + "," + format_double(b.acc_inclusion) + "," +
           format_double(b.acc_exact) + "," + format_double(b.mean_gpm) + "\n";
  }
  return out;
}

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kMargin = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

}  // namespace

std::string curve_svg(const std::vector<CurvePoint>& points, const std::string& title, const std::string& x_label) {
  std::map<std::string, std::vector<const CurvePoint*>> series;
  double x_lo = 0.0;
  double x_hi = 1.0;
  bool first = true;
  for (const auto& p : points) {
    series[p.series].push_back(&p);
    x_lo = first ? p.param : std::min(x_lo, p.param);
    x_hi = first ? p.param : std::max(x_hi, p.param);
    first = false;
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  const auto px = [&](double x) { return kMargin + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  const auto py = [&](double y) { return kHeight - kMargin - std::clamp(y, 0.0, 1.0) * plot_h; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(kWidth) + "\" height=\"" +
                    format_double(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + format_double(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\">" + xml_escape(title) +
         "</text>\n";
  svg += "<line x1=\"" + format_double(kMargin) + "\" y1=\"" + format_double(py(0)) + "\" x2=\"" +
         format_double(kWidth - kMargin) + "\" y2=\"" + format_double(py(0)) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_double(kMargin) + "\" y1=\"" + format_double(py(0)) + "\" x2=\"" +
         format_double(kMargin) + "\" y2=\"" + format_double(py(1)) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = t / 4.0;
    svg += "<text x=\"" + format_double(kMargin - 6) + "\" y=\"" + format_double(py(y) + 4) +
           "\" text-anchor=\"end\">" + format_double(y).substr(0, 4) + "</text>\n";
  }
  svg += "<text x=\"" + format_double(kWidth / 2) + "\" y=\"" + format_double(kHeight - 16) +
         "\" text-anchor=\"middle\">" + xml_escape(x_label) + "</text>\n";
  svg += "<text x=\"" + format_double(kMargin) + "\" y=\"" + format_double(kHeight - kMargin + 16) +
         "\" text-anchor=\"middle\">" + format_double(x_lo) + "</text>\n";
  svg += "<text x=\"" + format_double(kWidth - kMargin) + "\" y=\"" + format_double(kHeight - kMargin + 16) +
         "\" text-anchor=\"middle\">" + format_double(x_hi) + "</text>\n";

  std::size_t colour = 0;
  for (auto& [name, pts] : series) {
    std::sort(pts.begin(), pts.end(), [](const CurvePoint* a, const CurvePoint* b) { return a->param < b->param; });
    const char* stroke = kPalette[colour++ % std::size(kPalette)];
    std::string line;
    for (const auto* p : pts) {
      line += format_double(px(p->param)) + "," + format_double(py(p->mean_gpm)) + " ";
      svg += "<line x1=\"" + format_double(px(p->param)) + "\" y1=\"" + format_double(py(p->ci_low)) + "\" x2=\"" +
             format_double(px(p->param)) + "\" y2=\"" + format_double(py(p->ci_high)) + "\" stroke=\"" + stroke +
             "\" stroke-opacity=\"0.5\"/>\n";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"2\" points=\"" + line +
           "\"/>\n";
    svg += "<text x=\"" + format_double(kWidth - kMargin + 4) + "\" y=\"" +
           format_double(py(pts.back()->mean_gpm)) + "\" fill=\"" + stroke + "\" font-size=\"10\">" +
           xml_escape(name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string heatmap_svg(const std::vector<HeatmapCell>& cells, const std::string& title) {
  int rows = 0;
  int cols = 0;
  for (const auto& c : cells) {
    rows = std::max(rows, c.row + 1);
    cols = std::max(cols, c.col + 1);
  }
  const double cell = 32;
  const double w = std::max(1, cols) * cell + 2 * 20;
  const double h = std::max(1, rows) * cell + 40 + 20;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(w) + "\" height=\"" +
                    format_double(h) + "\" font-family=\"sans-serif\" font-size=\"9\">\n";
  svg += "<text x=\"" + format_double(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"12\">" +
         xml_escape(title) + "</text>\n";
  for (const auto& c : cells) {
    // lighter means higher
    const int level = static_cast<int>(std::lround(std::clamp(c.mean_gpm, 0.0, 1.0) * 255.0));
    char fill[8];
    std::snprintf(fill, sizeof fill, "#%02x%02x%02x", level, level, level);
    const double x = 20 + c.col * cell;
    const double y = 40 + c.row * cell;
    svg += "<rect x=\"" + format_double(x) + "\" y=\"" + format_double(y) + "\" width=\"" + format_double(cell) +
           "\" height=\"" + format_double(cell) + "\" fill=\"" + (c.n > 0 ? std::string(fill) : "#ff00ff") +
           "\" stroke=\"#808080\" stroke-width=\"0.5\"/>\n";
    svg += "<text x=\"" + format_double(x + cell / 2) + "\" y=\"" + format_double(y + cell / 2 + 3) +
           "\" text-anchor=\"middle\" fill=\"" + (level > 127 ? "black" : "white") + "\">" +
           format_double(c.mean_gpm).substr(0, 4) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace vprobe
