#pragma once

#include <string>
#include <vector>

namespace fairdd {

// Minimal self-contained SVG charts for run summaries. No external assets;
// output is a single standalone .svg file.

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // same length as x
};

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

// One bar per label; a zero baseline is drawn when values straddle it.
void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::string& y_label, const std::vector<std::string>& labels,
                         const std::vector<double>& values);

}  // namespace fairdd
