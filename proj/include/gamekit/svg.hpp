#pragma once

#include <string>
#include <vector>

namespace gamekit {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;  // reference lines
};

struct PlotOptions {
  std::string title, x_label, y_label;
  bool log_y = false;  // log10 vertical axis; non-positive samples are dropped
  int width = 860;
  int height = 520;
};

// Self-contained line chart, no external renderer involved. Series with
// mismatched x/y lengths are rejected.
void write_line_chart_svg(const std::string& path, const std::vector<PlotSeries>& series,
                          const PlotOptions& opts);

}  // namespace gamekit
