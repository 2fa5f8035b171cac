#include "autochar/bandgap.hpp"

#include "autochar/csv.hpp"
#include "autochar/error.hpp"
#include "autochar/parallel.hpp"
#include "autochar/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace autochar {

void BandGapConfig::validate() const {
  if (gamma != 0.5 && gamma != 2.0)
    throw DomainError("gamma must be 0.5 or 2");
  if (!(r2_min > 0.0 && r2_min <= 1.0))
    throw DomainError("r2_min must lie in (0, 1]");
  if (min_len < 2)
    throw DomainError("min_len must be at least 2");
  if (!(prominence_fraction >= 0.0 && prominence_fraction < 1.0))
    throw DomainError("prominence fraction must lie in [0, 1)");
}

double kubelka_munk(double r) {
  r = std::clamp(r, kReflectanceFloor, 1.0);
  return (1.0 - r) * (1.0 - r) / (2.0 * r);
}

TaucCurve tauc_transform(std::span<const double> wl, std::span<const double> refl,
                         double gamma) {
  if (wl.empty())
    throw DomainError("tauc_transform: empty spectrum");
  if (wl.size() != refl.size())
    throw DomainError("tauc_transform: wavelength/reflectance length mismatch");
  if (!(gamma > 0.0))
    throw DomainError("tauc_transform: gamma must be positive");
  TaucCurve c;
  c.gamma = gamma;
  c.energies.resize(wl.size());
  c.values.resize(wl.size());
  std::vector<std::size_t> order(wl.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return wl[a] > wl[b]; });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (!(wl[i] > 0.0) || !std::isfinite(wl[i]))
      throw DomainError("tauc_transform: wavelengths must be positive");
    if (!std::isfinite(refl[i]))
      throw DomainError("tauc_transform: non-finite reflectance");
    const double e = 1240.0 / wl[i];
    c.energies[k] = e;
    c.values[k] = std::pow(kubelka_munk(refl[i]) * e, 1.0 / gamma);
    if (k > 0 && !(e > c.energies[k - 1]))
      throw DomainError("tauc_transform: duplicate wavelength");
  }
  return c;
}

LineFit fit_line(const TaucCurve &curve, IndexRange range) {
  if (range.last > curve.size() || range.size() < 2)
    throw DomainError("fit_line: range needs at least 2 points inside the curve");
  const double n = static_cast<double>(range.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = range.first; i < range.last; ++i) {
    mx += curve.energies[i];
    my += curve.values[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = range.first; i < range.last; ++i) {
    const double dx = curve.energies[i] - mx;
    const double dy = curve.values[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LineFit f;
  f.range = range;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = range.first; i < range.last; ++i) {
    const double r = curve.values[i] - (f.slope * curve.energies[i] + f.intercept);
    ss_res += r * r;
  }
  f.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return f;
}

double window_rmse(const TaucCurve &curve, double slope, double intercept,
                   double lo, double hi, std::size_t *count) {
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double e = curve.energies[i];
    if (e < lo || e > hi)
      continue;
    const double r = curve.values[i] - (slope * e + intercept);
    ss += r * r;
    ++n;
  }
  if (count)
    *count = n;
  return n == 0 ? std::numeric_limits<double>::quiet_NaN()
                : std::sqrt(ss / static_cast<double>(n));
}

namespace {

void split(const TaucCurve &curve, IndexRange r, double r2_min,
           std::size_t min_len, std::vector<IndexRange> &out) {
  if (r.size() <= min_len || r.size() < 2 || fit_line(curve, r).r2 >= r2_min) {
    out.push_back(r);
    return;
  }
  const std::size_t mid = r.first + (r.size() + 1) / 2;
  split(curve, {r.first, mid}, r2_min, min_len, out);
  split(curve, {mid, r.last}, r2_min, min_len, out);
}

// Energy where the curve drops to `level`, walking from `from` by `step`
// (linear interpolation between samples); stops at `bound`.
double crossing(const TaucCurve &c, std::size_t from, std::size_t bound, int step,
                double level) {
  std::size_t k = from;
  while (k != bound) {
    const std::size_t nk = step < 0 ? k - 1 : k + 1;
    if (c.values[nk] <= level) {
      const double v0 = c.values[k], v1 = c.values[nk];
      const double f = v0 == v1 ? 0.0 : (v0 - level) / (v0 - v1);
      return c.energies[k] + f * (c.energies[nk] - c.energies[k]);
    }
    k = nk;
  }
  return c.energies[bound];
}

} // namespace

std::vector<IndexRange> recursive_segment(const TaucCurve &curve, double r2_min,
                                          std::size_t min_len) {
  std::vector<IndexRange> out;
  if (curve.size() == 0)
    return out;
  if (curve.size() < 2) {
    out.push_back({0, curve.size()});
    return out;
  }
  split(curve, {0, curve.size()}, r2_min, min_len, out);
  return out;
}

std::vector<Peak> detect_peaks(const TaucCurve &c, double fraction) {
  std::vector<Peak> peaks;
  const std::size_t n = c.size();
  if (n < 3)
    return peaks;
  const auto [mn, mx] = std::minmax_element(c.values.begin(), c.values.end());
  const double range = *mx - *mn;
  if (!(range > 0.0))
    return peaks;
  const double gate = fraction * range;

  std::size_t i = 1;
  while (i + 1 < n) {
    if (!(c.values[i] > c.values[i - 1])) {
      ++i;
      continue;
    }
    // Plateau run [i, j] of equal values.
    std::size_t j = i;
    while (j + 1 < n && c.values[j + 1] == c.values[i])
      ++j;
    if (j + 1 >= n || !(c.values[j + 1] < c.values[i])) {
      i = j + 1;
      continue;
    }
    const std::size_t p = i + (j - i) / 2;
    const double v = c.values[p];
    std::size_t lb = i, rb = j;
    double lmin = v, rmin = v;
    for (std::size_t k = i; k-- > 0;) {
      if (c.values[k] > v)
        break;
      if (c.values[k] < lmin) {
        lmin = c.values[k];
        lb = k;
      }
    }
    for (std::size_t k = j + 1; k < n; ++k) {
      if (c.values[k] > v)
        break;
      if (c.values[k] < rmin) {
        rmin = c.values[k];
        rb = k;
      }
    }
    const double prom = v - std::max(lmin, rmin);
    if (prom >= gate && prom > 0.0) {
      const double half = v - prom / 2.0;
      Peak pk;
      pk.index = p;
      pk.energy = c.energies[p];
      pk.prominence = prom;
      pk.width = crossing(c, j, rb, +1, half) - crossing(c, i, lb, -1, half);
      peaks.push_back(pk);
    }
    i = j + 1;
  }

  if (peaks.empty()) {
    const std::size_t p = n - 1;
    const double prom = c.values[p] - *mn;
    if (prom > 0.0) {
      Peak pk;
      pk.index = p;
      pk.energy = c.energies[p];
      pk.prominence = prom;
      pk.terminal = true;
      const double left = crossing(c, p, 0, -1, c.values[p] - prom / 2.0);
      pk.width = 2.0 * (pk.energy - left);
      peaks.push_back(pk);
    }
  }
  return peaks;
}

std::vector<Candidate> score_candidates(const TaucCurve &curve,
                                        const std::vector<IndexRange> &segments,
                                        const std::vector<Peak> &peaks) {
  if (segments.empty())
    throw DomainError("score_candidates: no segments");
  std::vector<IndexRange> unions;
  if (segments.size() == 1)
    unions.push_back(segments.front());
  for (std::size_t s = 0; s + 1 < segments.size(); ++s)
    unions.push_back({segments[s].first, segments[s + 1].last});

  const double e_lo = curve.energies.front();
  const double e_hi = curve.energies.back();
  std::vector<Candidate> out;
  for (const auto &u : unions) {
    if (u.size() < 2)
      continue;
    const LineFit line = fit_line(curve, u);
    if (!(line.slope > 0.0) || !std::isfinite(line.slope))
      continue;
    const double xi = line.x_intercept();
    if (!(xi >= e_lo && xi <= e_hi))
      continue;
    const Peak *nearest = nullptr;
    for (const auto &p : peaks)
      if (p.energy > xi && (!nearest || p.energy < nearest->energy))
        nearest = &p;
    if (!nearest)
      continue;
    const double hi = nearest->energy - nearest->width / 2.0;
    std::size_t count = 0;
    const double rmse = window_rmse(curve, line.slope, line.intercept, xi, hi, &count);
    if (count == 0)
      continue;
    out.push_back({line, xi, rmse, xi, hi, count});
  }
  return out;
}

BandGapResult extract_bandgap(const TaucCurve &curve, const BandGapConfig &cfg) {
  cfg.validate();
  if (curve.size() < 2)
    throw NoFitError("Tauc curve has fewer than 2 points");
  const auto segments = recursive_segment(curve, cfg.r2_min, cfg.min_len);
  BandGapResult res;
  res.peaks = detect_peaks(curve, cfg.prominence_fraction);
  const auto cands = score_candidates(curve, segments, res.peaks);
  if (cands.empty())
    throw NoFitError("no admissible Tauc edge line");
  const Candidate *best = &cands.front();
  for (const auto &c : cands)
    if (c.rmse < best->rmse || (c.rmse == best->rmse && c.e_g < best->e_g))
      best = &c;
  res.e_g = best->e_g;
  res.rmse = best->rmse;
  res.window_lo = best->window_lo;
  res.window_hi = best->window_hi;
  res.n_candidates = cands.size();
  res.line = best->line;
  return res;
}

std::vector<double> median_spectrum(const std::vector<std::vector<float>> &spectra) {
  if (spectra.empty())
    throw DomainError("median_spectrum: no spectra");
  const std::size_t bands = spectra.front().size();
  for (const auto &s : spectra)
    if (s.size() != bands)
      throw DomainError("median_spectrum: spectra differ in length");
  std::vector<double> out(bands);
  std::vector<float> col(spectra.size());
  const std::size_t m = col.size() / 2;
  for (std::size_t b = 0; b < bands; ++b) {
    for (std::size_t i = 0; i < spectra.size(); ++i)
      col[i] = spectra[i][b];
    std::nth_element(col.begin(), col.begin() + m, col.end());
    double med = col[m];
    if (col.size() % 2 == 0) {
      const float lower = *std::max_element(col.begin(), col.begin() + m);
      med = 0.5 * (static_cast<double>(lower) + med);
    }
    out[b] = med;
  }
  return out;
}

BandGapResult extract_bandgap(std::span<const double> wavelengths_nm,
                              const std::vector<std::vector<float>> &spectra,
                              const BandGapConfig &cfg) {
  const auto med = median_spectrum(spectra);
  return extract_bandgap(tauc_transform(wavelengths_nm, med, cfg.gamma), cfg);
}

std::vector<BandGapRecord> extract_bandgaps(const HyperCube &cube,
                                            const std::vector<SampleRegion> &regions,
                                            const CompositionMap *composition,
                                            const BandGapConfig &cfg) {
  cfg.validate();
  std::map<int, double> x_of;
  if (composition)
    for (const auto &e : *composition)
      x_of[e.region_id] = e.x;

  std::vector<BandGapRecord> out(regions.size());
  std::vector<std::string> failed(regions.size());
  parallel_for(regions.size(), [&](std::size_t i) {
    const auto &r = regions[i];
    std::vector<std::vector<float>> spectra;
    spectra.reserve(r.pixels.size());
    for (const auto &p : r.pixels)
      spectra.push_back(cube.spectrum(p.x, p.y));
    out[i].region_id = r.id;
    out[i].x_composition = std::numeric_limits<double>::quiet_NaN();
    if (composition) {
      auto it = x_of.find(r.id);
      if (it == x_of.end()) {
        failed[i] = "region " + std::to_string(r.id) + ": no composition entry";
        return;
      }
      out[i].x_composition = it->second;
    }
    try {
      out[i].result = extract_bandgap(cube.wavelengths(), spectra, cfg);
    } catch (const Error &e) {
      failed[i] = "region " + std::to_string(r.id) + ": " + e.what();
    }
  });

  std::string msg;
  std::size_t nfail = 0;
  for (const auto &f : failed)
    if (!f.empty()) {
      msg += "\n  " + f;
      ++nfail;
    }
  if (nfail)
    throw NoFitError("band-gap extraction failed for " + std::to_string(nfail) +
                     " region(s):" + msg);
  std::sort(out.begin(), out.end(),
            [](const auto &a, const auto &b) { return a.region_id < b.region_id; });
  return out;
}

void save_bandgap_csv(const std::vector<BandGapRecord> &records,
                      const std::filesystem::path &file) {
  CsvWriter csv({"region_id", "x_composition", "e_g_ev", "rmse", "n_candidates"});
  for (const auto &r : records)
    csv.row({std::to_string(r.region_id),
             std::isnan(r.x_composition) ? std::string() : format_double(r.x_composition),
             format_double(r.result.e_g), format_double(r.result.rmse),
             std::to_string(r.result.n_candidates)});
  csv.save(file);
}

std::string bandgap_fit_svg(const TaucCurve &curve, const BandGapResult &result,
                            const std::string &title) {
  PlotSpec spec;
  spec.title = title;
  spec.x_label = "photon energy (eV)";
  spec.y_label = "Tauc value";
  PlotSeries data{"Tauc curve", curve.energies, curve.values,
                  PlotSeries::Style::Line, "#1f77b4"};
  const double top = result.window_hi + 0.25;
  PlotSeries fit{"edge fit",
                 {result.e_g, top},
                 {0.0, result.line.slope * top + result.line.intercept},
                 PlotSeries::Style::Line,
                 "#d62728"};
  spec.series = {data, fit};
  spec.guides = {{true, result.window_lo, "#2ca02c"}, {true, result.window_hi, "#2ca02c"}};
  const auto [mn, mx] = std::minmax_element(curve.values.begin(), curve.values.end());
  const double pad = (*mx - *mn) * 0.05 + 1e-12;
  spec.x_range = std::pair{curve.energies.front(), curve.energies.back()};
  spec.y_range = std::pair{*mn - pad, *mx + pad};
  return render_svg(spec);
}

} // namespace autochar
