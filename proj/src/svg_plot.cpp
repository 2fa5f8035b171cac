#include "autochar/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace autochar {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string &s) {
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

std::pair<double, double> data_range(const PlotSpec &spec, bool x_axis) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto &s : spec.series) {
    const auto &v = x_axis ? s.x : s.y;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        continue;
      lo = std::min(lo, v[i]);
      hi = std::max(hi, v[i]);
    }
  }
  if (!std::isfinite(lo))
    return {0.0, 1.0};
  if (hi == lo) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.04;
  return {lo - pad, hi + pad};
}

std::vector<double> ticks(double lo, double hi) {
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
    out.push_back(t);
  return out;
}

} // namespace

std::string render_svg(const PlotSpec &spec) {
  const double ml = 70, mr = 20, mt = 36, mb = 52;
  const double pw = spec.width - ml - mr;
  const double ph = spec.height - mt - mb;
  const auto [x0, x1] = spec.x_range.value_or(data_range(spec, true));
  const auto [y0, y1] = spec.y_range.value_or(data_range(spec, false));
  auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
    << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width << ' '
    << spec.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(spec.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" "
    << "font-size=\"14\">" << escape(spec.title) << "</text>\n";
  o << "<defs><clipPath id=\"plot\"><rect x=\"" << num(ml) << "\" y=\"" << num(mt)
    << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\"/></clipPath></defs>\n";

  for (double t : ticks(x0, x1)) {
    o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(mt + ph) << "\" x2=\""
      << num(sx(t)) << "\" y2=\"" << num(mt + ph + 5) << "\" stroke=\"black\"/>"
      << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(mt + ph + 18)
      << "\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
  }
  for (double t : ticks(y0, y1)) {
    o << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(sy(t)) << "\" x2=\""
      << num(ml) << "\" y2=\"" << num(sy(t)) << "\" stroke=\"black\"/>"
      << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(sy(t) + 4)
      << "\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
  }
  o << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(spec.height - 12.0)
    << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << num(mt + ph / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label)
    << "</text>\n";

  o << "<g clip-path=\"url(#plot)\">\n";
  for (const auto &g : spec.guides) {
    if (g.vertical)
      o << "<line x1=\"" << num(sx(g.value)) << "\" y1=\"" << num(mt) << "\" x2=\""
        << num(sx(g.value)) << "\" y2=\"" << num(mt + ph);
    else
      o << "<line x1=\"" << num(ml) << "\" y1=\"" << num(sy(g.value)) << "\" x2=\""
        << num(ml + pw) << "\" y2=\"" << num(sy(g.value));
    o << "\" stroke=\"" << g.color << "\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (const auto &s : spec.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.style == PlotSeries::Style::Points) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
          continue;
        o << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i]))
          << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
      }
      continue;
    }
    o << "<polyline fill=\"none\" stroke=\"" << s.color
      << "\" stroke-width=\"1.5\" points=\"";
    bool have_prev = false;
    double prev_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        continue;
      if (s.style == PlotSeries::Style::Step && have_prev)
        o << num(sx(s.x[i])) << ',' << num(sy(prev_y)) << ' ';
      o << num(sx(s.x[i])) << ',' << num(sy(s.y[i])) << ' ';
      have_prev = true;
      prev_y = s.y[i];
    }
    o << "\"/>\n";
  }
  o << "</g>\n";

  double ly = mt + 14;
  for (const auto &s : spec.series) {
    if (s.label.empty())
      continue;
    o << "<rect x=\"" << num(ml + pw - 150) << "\" y=\"" << num(ly - 9)
      << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>"
      << "<text x=\"" << num(ml + pw - 135) << "\" y=\"" << num(ly) << "\">"
      << escape(s.label) << "</text>\n";
    ly += 16;
  }
  o << "</svg>\n";
  return o.str();
}

} // namespace autochar
