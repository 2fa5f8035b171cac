#include "autochar/composition_map.hpp"

#include "autochar/csv.hpp"
#include "autochar/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace autochar {

PumpTrace::PumpTrace(std::vector<PumpSample> samples)
    : samples_(std::move(samples)) {
  if (samples_.size() < 2)
    throw DomainError("pump trace: need at least 2 samples");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto &s = samples_[i];
    if (!std::isfinite(s.t_s) || !std::isfinite(s.omega_fa) ||
        !std::isfinite(s.omega_ma))
      throw DomainError("pump trace: non-finite sample");
    if (s.omega_fa < 0.0 || s.omega_ma < 0.0)
      throw DomainError("pump trace: negative pump speed at t=" +
                        format_double(s.t_s));
    if (i > 0 && !(s.t_s > samples_[i - 1].t_s))
      throw DomainError("pump trace: timestamps must be strictly ascending");
  }
}

PumpSample PumpTrace::at(double t) const {
  if (t < t_begin() || t > t_end())
    throw DomainError("pump trace: t=" + format_double(t) + " outside trace");
  auto it = std::upper_bound(
      samples_.begin(), samples_.end(), t,
      [](double v, const PumpSample &s) { return v < s.t_s; });
  if (it == samples_.end())
    return samples_.back();
  const auto &hi = *it;
  const auto &lo = *(it - 1);
  const double f = (t - lo.t_s) / (hi.t_s - lo.t_s);
  return {t, lo.omega_fa + f * (hi.omega_fa - lo.omega_fa),
          lo.omega_ma + f * (hi.omega_ma - lo.omega_ma)};
}

PlateCalibration::PlateCalibration(std::array<double, 6> c) : c_(c) {
  const double det = c_[0] * c_[4] - c_[1] * c_[3];
  if (!std::isfinite(det) || det == 0.0)
    throw DomainError("plate calibration is not invertible");
}

std::array<double, 2> PlateCalibration::to_px(double x_mm, double y_mm) const {
  const double det = c_[0] * c_[4] - c_[1] * c_[3];
  const double u = x_mm - c_[2];
  const double v = y_mm - c_[5];
  return {(c_[4] * u - c_[1] * v) / det, (-c_[3] * u + c_[0] * v) / det};
}

RasterPath parse_gcode(std::string_view text) {
  RasterPath path;
  path.waypoints.push_back({0.0, 0.0, 0.0});
  double x = 0.0, y = 0.0, t = 0.0;
  std::optional<double> feed_mm_s;
  bool motion_mode = false;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto semi = line.find(';'); semi != std::string_view::npos)
      line = line.substr(0, semi);

    std::optional<double> nx, ny;
    std::size_t i = 0;
    auto where = [&] { return "gcode line " + std::to_string(line_no); };
    while (i < line.size()) {
      const char ch = line[i];
      if (std::isspace(static_cast<unsigned char>(ch))) {
        ++i;
        continue;
      }
      const char letter =
          static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      std::size_t j = i + 1;
      while (j < line.size() &&
             (std::isdigit(static_cast<unsigned char>(line[j])) ||
              line[j] == '.' || line[j] == '-' || line[j] == '+'))
        ++j;
      const std::string_view word = line.substr(i, j - i);
      const std::string_view num = line.substr(i + 1, j - i - 1);
      if (num.empty())
        throw FormatError(where() + ": unsupported word '" + std::string(word) + "'");
      const double value = parse_double(num, where());
      switch (letter) {
      case 'G':
        if (value != 0.0 && value != 1.0)
          throw FormatError(where() + ": unsupported word '" + std::string(word) +
                            "'");
        motion_mode = true;
        break;
      case 'X':
        nx = value;
        break;
      case 'Y':
        ny = value;
        break;
      case 'F':
        if (!(value > 0.0))
          throw FormatError(where() + ": feed rate must be positive");
        feed_mm_s = value / 60.0;
        break;
      default:
        throw FormatError(where() + ": unsupported word '" + std::string(word) + "'");
      }
      i = j;
    }
    if (!nx && !ny)
      continue;
    if (!motion_mode)
      throw FormatError(where() + ": coordinates without a G0/G1 motion mode");
    if (!feed_mm_s)
      throw FormatError(where() + ": motion before any feed rate is set");
    const double tx = nx.value_or(x);
    const double ty = ny.value_or(y);
    const double len = std::hypot(tx - x, ty - y);
    if (len == 0.0)
      continue;
    t += len / *feed_mm_s;
    x = tx;
    y = ty;
    path.waypoints.push_back({t, x, y});
  }
  return path;
}

std::vector<RegionWindow> timestamp_regions(const std::vector<SampleRegion> &regions,
                                            const RasterPath &path,
                                            const PlateCalibration &cal,
                                            double droplet_interval_s,
                                            double gate_mm) {
  if (path.waypoints.empty())
    throw DomainError("raster path is empty");
  const double t_end = path.duration_s();
  if (!(t_end > 0.0))
    throw DomainError("raster path has zero duration");
  if (!(droplet_interval_s > 0.0))
    throw DomainError("droplet interval must be positive");

  std::vector<RegionWindow> out;
  std::vector<int> unmatched;
  const auto &w = path.waypoints;
  for (const auto &r : regions) {
    const auto [px, py] = cal.to_mm(r.centroid_x, r.centroid_y);
    double best_d = std::hypot(px - w[0].x_mm, py - w[0].y_mm);
    double best_t = w[0].t_s;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      const double dx = w[i + 1].x_mm - w[i].x_mm;
      const double dy = w[i + 1].y_mm - w[i].y_mm;
      const double len2 = dx * dx + dy * dy;
      double s = len2 > 0.0 ? ((px - w[i].x_mm) * dx + (py - w[i].y_mm) * dy) / len2
                            : 0.0;
      s = std::clamp(s, 0.0, 1.0);
      const double d =
          std::hypot(px - (w[i].x_mm + s * dx), py - (w[i].y_mm + s * dy));
      // Earlier time wins ties.
      if (d < best_d - 1e-9 * (1.0 + best_d)) {
        best_d = d;
        best_t = w[i].t_s + s * (w[i + 1].t_s - w[i].t_s);
      }
    }
    if (best_d > gate_mm) {
      unmatched.push_back(r.id);
      continue;
    }
    RegionWindow rw;
    rw.region_id = r.id;
    rw.t_center = best_t;
    rw.distance_mm = best_d;
    rw.t_a = std::clamp(best_t - droplet_interval_s / 2.0, 0.0, t_end);
    rw.t_b = std::clamp(best_t + droplet_interval_s / 2.0, 0.0, t_end);
    out.push_back(rw);
  }
  if (!unmatched.empty()) {
    std::ostringstream msg;
    msg << "regions farther than " << gate_mm << " mm from the raster path:";
    for (int id : unmatched)
      msg << ' ' << id;
    throw UnmatchedRegionsError(msg.str(), std::move(unmatched));
  }
  return out;
}

namespace {

double ma_fraction(const PumpSample &s) { return s.omega_ma / (s.omega_ma + s.omega_fa); }

// Trapezoid rule on [u, v] (one linear piece of the trace), doubling the
// panel count until successive estimates agree.
double integrate_piece(const PumpTrace &trace, double u, double v) {
  const PumpSample a = trace.at(u);
  const PumpSample b = trace.at(v);
  const double fa = ma_fraction(a), fb = ma_fraction(b);
  auto f = [&](double t) {
    const double s = (t - u) / (v - u);
    const double ma = a.omega_ma + s * (b.omega_ma - a.omega_ma);
    const double fa_ = a.omega_fa + s * (b.omega_fa - a.omega_fa);
    return ma / (ma + fa_);
  };
  double h = v - u;
  double est = 0.5 * h * (fa + fb);
  double interior = 0.0;
  for (int level = 1, n = 1; level <= 20; ++level, n *= 2) {
    double added = 0.0;
    for (int k = 0; k < n; ++k)
      added += f(u + (k + 0.5) * h);
    interior += added;
    h /= 2.0;
    const double next = h * (0.5 * (fa + fb) + interior);
    if (std::abs(next - est) <= 1e-14 * std::max(1.0, std::abs(next)) * (v - u) ||
        std::abs(next - est) <= 1e-15)
      return next;
    est = next;
  }
  return est;
}

} // namespace

double integrate_composition(const PumpTrace &trace, double t_a, double t_b) {
  if (!(t_a < t_b))
    throw DomainError("composition window needs t_a < t_b");
  if (t_a < trace.t_begin() || t_b > trace.t_end())
    throw DomainError("composition window [" + format_double(t_a) + ", " +
                      format_double(t_b) + "] outside pump trace");
  std::vector<double> nodes{t_a};
  for (const auto &s : trace.samples())
    if (s.t_s > t_a && s.t_s < t_b)
      nodes.push_back(s.t_s);
  nodes.push_back(t_b);
  for (double t : nodes) {
    const auto s = trace.at(t);
    if (!(s.omega_fa + s.omega_ma > 0.0))
      throw DomainError("total pump speed is zero at t=" + format_double(t));
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    total += integrate_piece(trace, nodes[i], nodes[i + 1]);
  return std::clamp(total / (t_b - t_a), 0.0, 1.0);
}

CompositionMap build_composition_map(const std::vector<SampleRegion> &regions,
                                     const RasterPath &path,
                                     const PumpTrace &trace,
                                     const PlateCalibration &cal,
                                     std::optional<double> droplet_interval_s,
                                     double gate_mm) {
  if (regions.empty())
    return {};
  const double interval =
      droplet_interval_s.value_or(path.duration_s() /
                                  static_cast<double>(regions.size()));
  const auto windows = timestamp_regions(regions, path, cal, interval, gate_mm);
  CompositionMap map;
  std::vector<std::string> failures;
  for (const auto &w : windows) {
    try {
      map.push_back({w.region_id, integrate_composition(trace, w.t_a, w.t_b),
                     w.t_a, w.t_b});
    } catch (const DomainError &e) {
      failures.push_back("region " + std::to_string(w.region_id) + ": " + e.what());
    }
  }
  if (!failures.empty()) {
    std::string msg = "composition mapping failed for " +
                      std::to_string(failures.size()) + " region(s)";
    for (const auto &f : failures)
      msg += "\n  " + f;
    throw DomainError(msg);
  }
  std::sort(map.begin(), map.end(),
            [](const auto &a, const auto &b) { return a.region_id < b.region_id; });
  return map;
}

PumpTrace load_pump_trace(const std::filesystem::path &file) {
  const CsvTable t = read_csv(file);
  const auto ct = t.column("t_s"), cf = t.column("omega_fa"),
             cm = t.column("omega_ma");
  std::vector<PumpSample> samples;
  for (const auto &row : t.rows)
    samples.push_back({parse_double(row[ct], file.string()),
                       parse_double(row[cf], file.string()),
                       parse_double(row[cm], file.string())});
  return PumpTrace(std::move(samples));
}

void save_pump_trace(const PumpTrace &trace, const std::filesystem::path &file) {
  CsvWriter csv({"t_s", "omega_fa", "omega_ma"});
  for (const auto &s : trace.samples())
    csv.row({format_double(s.t_s), format_double(s.omega_fa),
             format_double(s.omega_ma)});
  csv.save(file);
}

void save_composition_map(const CompositionMap &map,
                          const std::filesystem::path &file) {
  CsvWriter csv({"region_id", "x", "t_a", "t_b"});
  for (const auto &e : map)
    csv.row({std::to_string(e.region_id), format_double(e.x),
             format_double(e.t_a), format_double(e.t_b)});
  csv.save(file);
}

CompositionMap load_composition_map(const std::filesystem::path &file) {
  const CsvTable t = read_csv(file);
  const auto ci = t.column("region_id"), cx = t.column("x"),
             ca = t.column("t_a"), cb = t.column("t_b");
  CompositionMap map;
  for (const auto &row : t.rows)
    map.push_back({static_cast<int>(parse_int(row[ci], file.string())),
                   parse_double(row[cx], file.string()),
                   parse_double(row[ca], file.string()),
                   parse_double(row[cb], file.string())});
  std::sort(map.begin(), map.end(),
            [](const auto &a, const auto &b) { return a.region_id < b.region_id; });
  return map;
}

} // namespace autochar
