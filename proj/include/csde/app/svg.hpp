#pragma once

#include <string>
#include <vector>

namespace csde::app {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG line chart: axes with min/max tick labels, one polyline
/// per series and a legend. Non-finite points are skipped.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

}  // namespace csde::app
