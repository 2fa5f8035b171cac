#pragma once

#include "autochar/color_calibrate.hpp"
#include "autochar/composition_map.hpp"
#include "autochar/cube_io.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace autochar {

struct DegradationSeries {
  int region_id = 0;
  std::vector<double> times_h;                   // ascending
  std::vector<std::array<double, 3>> colors;     // mean channel values per frame
  std::size_t pixel_count = 0;
  void validate() const;
};

// Channels averaged per region. With a model: calibrated XYZ divided by the
// D50 white. Without: raw RGB in [0, 1].
std::vector<DegradationSeries> extract_series(const FrameSequence &frames,
                                              const LabelMap &labels,
                                              const TpsModel *model);

// i_c = pixel_count * sum over channels of trapezoid integral of
// |R(t) - R(0)| dt, t in hours.
double instability_index(const DegradationSeries &series);
// Single channel contribution (channel in 0..2).
double instability_index(const DegradationSeries &series, int channel);

struct StabilityResult {
  int region_id = 0;
  double x_composition = 0.0; // NaN without a composition map
  double i_c = 0.0;           // px * hr
  bool degraded = false;
  double boundary = 0.0;
};

// degraded <=> i_c > boundary.
void classify(std::vector<StabilityResult> &results, double boundary);

std::vector<StabilityResult> assess_stability(const std::vector<DegradationSeries> &series,
                                              const CompositionMap *composition,
                                              double boundary);

// CSV: region_id,x_composition,i_c_px_hr,degraded
void save_stability_csv(const std::vector<StabilityResult> &results,
                        const std::filesystem::path &file);

// One row per region, one column per frame, channels scaled to 8 bits.
void save_series_strip(const std::vector<DegradationSeries> &series,
                       const std::filesystem::path &file);

} // namespace autochar
