#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace autochar {

struct PlotSeries {
  enum class Style { Line, Points, Step };
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  Style style = Style::Line;
  std::string color = "#1f77b4";
};

// Vertical or horizontal guide lines (e.g. a fit window or decision boundary).
struct PlotGuide {
  bool vertical = true;
  double value = 0.0;
  std::string color = "#888888";
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  std::vector<PlotGuide> guides;
  std::optional<std::pair<double, double>> x_range;
  std::optional<std::pair<double, double>> y_range;
  int width = 640;
  int height = 420;
};

// Self-contained SVG document. Non-finite points are skipped.
std::string render_svg(const PlotSpec &spec);

} // namespace autochar
