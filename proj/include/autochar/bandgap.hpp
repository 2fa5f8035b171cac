#pragma once

#include "autochar/composition_map.hpp"
#include "autochar/cube_io.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace autochar {

struct TaucCurve {
  std::vector<double> energies; // eV, strictly ascending
  std::vector<double> values;   // (F(R) * E)^(1/gamma)
  double gamma = 0.5;
  std::size_t size() const { return energies.size(); }
};

// Half-open index range [first, last) of a curve.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t size() const { return last - first; }
  bool operator==(const IndexRange &) const = default;
};

struct LineFit {
  IndexRange range;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double x_intercept() const { return -intercept / slope; }
};

struct Peak {
  std::size_t index = 0;
  double energy = 0.0;
  double prominence = 0.0;
  double width = 0.0; // eV between half-prominence crossings
  bool terminal = false;
};

struct Candidate {
  LineFit line;
  double e_g = 0.0;
  double rmse = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t window_points = 0;
};

struct BandGapResult {
  double e_g = 0.0;
  double rmse = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t n_candidates = 0;
  LineFit line;
  std::vector<Peak> peaks;
};

struct BandGapConfig {
  double gamma = 0.5;
  double r2_min = 0.990;
  std::size_t min_len = 5;
  double prominence_fraction = 0.05;
  void validate() const;
};

inline constexpr double kReflectanceFloor = 1e-4;

// F(R) = (1 - R)^2 / (2R), R clipped to [1e-4, 1].
double kubelka_munk(double reflectance);

// Reflectance spectrum on ascending or descending wavelengths (nm) to a Tauc
// curve on ascending photon energy E = 1240 / lambda.
TaucCurve tauc_transform(std::span<const double> wavelengths_nm,
                         std::span<const double> reflectance, double gamma = 0.5);

// Least-squares line over curve points in `range` (centered two-pass sums).
// R^2 = 1 - SS_res / SS_tot, taken as 1 when SS_tot = 0.
LineFit fit_line(const TaucCurve &curve, IndexRange range);

// sqrt(mean((y - (slope*E + intercept))^2)) over points with lo <= E <= hi.
// Returns the number of points used through `count`.
double window_rmse(const TaucCurve &curve, double slope, double intercept,
                   double lo, double hi, std::size_t *count = nullptr);

// Halves ranges (left part takes the extra point) until each has R^2 >= r2_min
// or at most min_len points.
std::vector<IndexRange> recursive_segment(const TaucCurve &curve,
                                          double r2_min = 0.990,
                                          std::size_t min_len = 5);

// Interior local maxima with prominence >= fraction * value range. When none
// qualifies a terminal pseudo-peak at the high-energy end is returned, whose
// width is twice the distance to its left half-prominence crossing.
std::vector<Peak> detect_peaks(const TaucCurve &curve,
                               double prominence_fraction = 0.05);

// One line per adjacent segment pair (or the single segment), scored on
// [x-intercept, nearest peak above it - width/2]. Inadmissible lines dropped.
std::vector<Candidate> score_candidates(const TaucCurve &curve,
                                        const std::vector<IndexRange> &segments,
                                        const std::vector<Peak> &peaks);

// Full chain on one Tauc curve. Throws NoFitError without admissible lines.
BandGapResult extract_bandgap(const TaucCurve &curve, const BandGapConfig &cfg = {});

// Per-wavelength median over pixel spectra (mean of the middle pair for even
// counts).
std::vector<double> median_spectrum(const std::vector<std::vector<float>> &spectra);

// Median spectrum -> Tauc curve -> extract.
BandGapResult extract_bandgap(std::span<const double> wavelengths_nm,
                              const std::vector<std::vector<float>> &spectra,
                              const BandGapConfig &cfg = {});

struct BandGapRecord {
  int region_id = 0;
  double x_composition = 0.0; // NaN when no composition map is supplied
  BandGapResult result;
};

// Parallel over regions; output in region-id order. Regions without a fit are
// reported together in one NoFitError.
std::vector<BandGapRecord> extract_bandgaps(const HyperCube &cube,
                                            const std::vector<SampleRegion> &regions,
                                            const CompositionMap *composition,
                                            const BandGapConfig &cfg = {});

// CSV: region_id,x_composition,e_g_ev,rmse,n_candidates
void save_bandgap_csv(const std::vector<BandGapRecord> &records,
                      const std::filesystem::path &file);

// Tauc curve with the winning line and its scoring window.
std::string bandgap_fit_svg(const TaucCurve &curve, const BandGapResult &result,
                            const std::string &title);

} // namespace autochar
