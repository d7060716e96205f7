#pragma once

#include <string>
#include <utility>
#include <vector>

namespace artrd {

struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Self-contained line chart (fixed 800x500 canvas, auto-scaled axes).
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series);

/// Scatter plot with the same frame.
std::string svg_scatter(const std::string& title, const std::string& x_label,
                        const std::string& y_label,
                        const std::vector<std::pair<double, double>>& points);

}  // namespace artrd
