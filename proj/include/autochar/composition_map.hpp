#pragma once

#include "autochar/vision_segment.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace autochar {

struct PumpSample {
  double t_s = 0.0;
  double omega_fa = 0.0;
  double omega_ma = 0.0;
};

// Time-stamped pump speeds, linearly interpolated between samples.
class PumpTrace {
public:
  PumpTrace() = default;
  // Requires >= 2 samples, strictly ascending t, non-negative finite speeds.
  explicit PumpTrace(std::vector<PumpSample> samples);

  const std::vector<PumpSample> &samples() const { return samples_; }
  double t_begin() const { return samples_.front().t_s; }
  double t_end() const { return samples_.back().t_s; }
  PumpSample at(double t_s) const;

private:
  std::vector<PumpSample> samples_;
};

struct Waypoint {
  double t_s = 0.0;
  double x_mm = 0.0;
  double y_mm = 0.0;
};

struct RasterPath {
  std::vector<Waypoint> waypoints; // starts at the origin, t = 0
  double duration_s() const {
    return waypoints.empty() ? 0.0 : waypoints.back().t_s;
  }
};

// Affine map from image pixels to substrate millimetres:
//   x_mm = c[0] * px + c[1] * py + c[2]
//   y_mm = c[3] * px + c[4] * py + c[5]
class PlateCalibration {
public:
  PlateCalibration() : c_{1, 0, 0, 0, 1, 0} {}
  // Throws DomainError for a singular linear part.
  explicit PlateCalibration(std::array<double, 6> coefficients);

  const std::array<double, 6> &coefficients() const { return c_; }
  std::array<double, 2> to_mm(double px, double py) const {
    return {c_[0] * px + c_[1] * py + c_[2], c_[3] * px + c_[4] * py + c_[5]};
  }
  std::array<double, 2> to_px(double x_mm, double y_mm) const;

private:
  std::array<double, 6> c_;
};

struct CompositionEntry {
  int region_id = 0;
  double x = 0.0; // MA fraction in [0, 1]
  double t_a = 0.0;
  double t_b = 0.0;
};
using CompositionMap = std::vector<CompositionEntry>; // ascending region id

// Supported dialect: G0/G1 with X/Y/F words (absolute mm, F in mm/min) and
// ';' comments. Waypoint times accumulate segment length / feed rate.
RasterPath parse_gcode(std::string_view text);

struct RegionWindow {
  int region_id = 0;
  double t_center = 0.0; // projection time on the path
  double t_a = 0.0;
  double t_b = 0.0;
  double distance_mm = 0.0; // centroid to path
};

// Projects every region centroid onto the nearest point of the path polyline
// (earliest time on ties) and opens a window of droplet_interval_s around it,
// clamped to [0, path end]. Regions farther than gate_mm from the path raise
// UnmatchedRegionsError listing all offending ids.
std::vector<RegionWindow> timestamp_regions(const std::vector<SampleRegion> &regions,
                                            const RasterPath &path,
                                            const PlateCalibration &cal,
                                            double droplet_interval_s,
                                            double gate_mm = 5.0);

// Time-averaged MA fraction over [t_a, t_b]:
//   x = 1/(t_b - t_a) * integral of w_ma / (w_ma + w_fa) dt
// by adaptively refined trapezoids on the linearly interpolated trace.
double integrate_composition(const PumpTrace &trace, double t_a, double t_b);

// droplet_interval_s defaults to path duration / region count.
CompositionMap build_composition_map(const std::vector<SampleRegion> &regions,
                                     const RasterPath &path,
                                     const PumpTrace &trace,
                                     const PlateCalibration &cal,
                                     std::optional<double> droplet_interval_s = {},
                                     double gate_mm = 5.0);

// CSV: t_s,omega_fa,omega_ma
PumpTrace load_pump_trace(const std::filesystem::path &file);
void save_pump_trace(const PumpTrace &trace, const std::filesystem::path &file);
// CSV: region_id,x,t_a,t_b
void save_composition_map(const CompositionMap &map,
                          const std::filesystem::path &file);
CompositionMap load_composition_map(const std::filesystem::path &file);

} // namespace autochar
