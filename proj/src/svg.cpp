#include "gamekit/svg.hpp"

#include "gamekit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace gamekit {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Tick spacing from the 1-2-5 ladder covering the span with ~6 steps.
double nice_step(double span) {
  if (span <= 0.0) return 1.0;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double step = 10.0;
  if (frac <= 1.0)
    step = 1.0;
  else if (frac <= 2.0)
    step = 2.0;
  else if (frac <= 5.0)
    step = 5.0;
  return step * mag;
}

}  // namespace

void write_line_chart_svg(const std::string& path, const std::vector<PlotSeries>& series,
                          const PlotOptions& opts) {
  if (series.empty()) throw InvalidInput("write_line_chart_svg: no series");
  for (const auto& s : series)
    if (s.x.size() != s.y.size())
      throw InvalidInput("write_line_chart_svg: series '" + s.label + "' has mismatched x/y lengths");

  // Gather plottable points (finite; positive when the y axis is logarithmic).
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!opts.log_y || y > 0.0);
  };
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k)
      if (usable(s.x[k], s.y[k])) {
        const double yv = opts.log_y ? std::log10(s.y[k]) : s.y[k];
        x_min = std::min(x_min, s.x[k]);
        x_max = std::max(x_max, s.x[k]);
        y_min = std::min(y_min, yv);
        y_max = std::max(y_max, yv);
      }
  if (!std::isfinite(x_min) || !std::isfinite(y_min))
    throw InvalidInput("write_line_chart_svg: no plottable points");
  if (x_max == x_min) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max == y_min) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double ml = 72, mr = 24, mt = 42, mb = 52;
  const double pw = opts.width - ml - mr;
  const double ph = opts.height - mt - mb;
  auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) {
    const double yv = opts.log_y ? std::log10(y) : y;
    return mt + ph - (yv - y_min) / (y_max - y_min) * ph;
  };

  std::ofstream f(path);
  if (!f) throw IoError("write_line_chart_svg: cannot open '" + path + "'");

  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width << "\" height=\""
    << opts.height << "\" viewBox=\"0 0 " << opts.width << " " << opts.height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<g font-family=\"sans-serif\" font-size=\"12\">\n";

  if (!opts.title.empty())
    f << "<text x=\"" << opts.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(opts.title) << "</text>\n";

  // Frame and grid.
  f << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#333\"/>\n";

  const double x_step = nice_step(x_max - x_min);
  for (double tx = std::ceil(x_min / x_step) * x_step; tx <= x_max + 1e-9 * x_step; tx += x_step) {
    const double px = sx(tx);
    f << "<line x1=\"" << num(px) << "\" y1=\"" << mt << "\" x2=\"" << num(px) << "\" y2=\""
      << mt + ph << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << num(px) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
      << num(tx) << "</text>\n";
  }
  const double y_step = nice_step(y_max - y_min);
  for (double ty = std::ceil(y_min / y_step) * y_step; ty <= y_max + 1e-9 * y_step; ty += y_step) {
    const double py = mt + ph - (ty - y_min) / (y_max - y_min) * ph;
    const std::string label = opts.log_y ? ("1e" + num(ty)) : num(ty);
    f << "<line x1=\"" << ml << "\" y1=\"" << num(py) << "\" x2=\"" << ml + pw << "\" y2=\""
      << num(py) << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << ml - 6 << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">" << label
      << "</text>\n";
  }

  if (!opts.x_label.empty())
    f << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opts.height - 10
      << "\" text-anchor=\"middle\">" << escape(opts.x_label) << "</text>\n";
  if (!opts.y_label.empty())
    f << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">" << escape(opts.y_label) << "</text>\n";

  // Series.
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::string points;
    bool broken = true;  // restart the polyline around unusable samples
    std::vector<std::string> segments;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!usable(s.x[k], s.y[k])) {
        broken = true;
        continue;
      }
      if (broken && !points.empty()) {
        segments.push_back(points);
        points.clear();
      }
      broken = false;
      points += num(sx(s.x[k])) + "," + num(sy(s.y[k])) + " ";
    }
    if (!points.empty()) segments.push_back(points);
    for (const auto& seg : segments)
      f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\""
        << (s.dashed ? " stroke-dasharray=\"7 5\"" : "") << " points=\"" << seg << "\"/>\n";
  }

  // Legend, top right inside the frame.
  const double lx = ml + pw - 180, ly = mt + 10;
  f << "<rect x=\"" << lx - 8 << "\" y=\"" << ly - 4 << "\" width=\"186\" height=\""
    << 18 * static_cast<int>(series.size()) + 8 << "\" fill=\"white\" opacity=\"0.85\" stroke=\"#999\"/>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const double ty = ly + 18 * static_cast<double>(si) + 8;
    f << "<line x1=\"" << lx << "\" y1=\"" << ty - 4 << "\" x2=\"" << lx + 26 << "\" y2=\"" << ty - 4
      << "\" stroke=\"" << kPalette[si % kPaletteSize] << "\" stroke-width=\"2\""
      << (series[si].dashed ? " stroke-dasharray=\"7 5\"" : "") << "/>\n"
      << "<text x=\"" << lx + 32 << "\" y=\"" << ty << "\">" << escape(series[si].label)
      << "</text>\n";
  }

  f << "</g>\n</svg>\n";
  if (!f) throw IoError("write_line_chart_svg: write failure on '" + path + "'");
}

}  // namespace gamekit
