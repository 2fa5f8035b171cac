#pragma once

#include "autochar/benchmark.hpp"
#include "autochar/color_calibrate.hpp"
#include "autochar/composition_map.hpp"
#include "autochar/cube_io.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace autochar {

// Target Tauc profile (gamma = 1/2): zero below e_g, slope * (E - e_g) on the
// 0.3 eV edge, then a tanh roll-off to a plateau.
inline constexpr double kSynthSlope = 50.0;
inline constexpr double kSynthEdgeWidth = 0.3;
inline constexpr double kSynthRolloff = 0.05;

double synth_tauc_value(double e_g, double energy_ev);

// 380..1020 nm inclusive.
std::vector<double> default_wavelengths(double step_nm = 2.0);

// Noise-free reflectance in (0, 1] whose Tauc transform is the target
// profile. Throws DomainError if e_g lies outside the wavelength energy range.
std::vector<double> synth_reflectance(double e_g, std::span<const double> wavelengths_nm);

struct DiskSpec {
  double cx = 0.0; // px
  double cy = 0.0;
  double radius = 0.0;
  double e_g = 1.6;
  Rgb color0{0.16, 0.12, 0.12};      // frame-0 colour
  std::array<double, 3> drift{};     // total change over the sequence
  bool step_drift = false;           // jump right after t = 0 instead of ramp
};

struct SceneSpec {
  int width = 0;
  int height = 0;
  std::vector<DiskSpec> disks; // label i + 1 = disks[i]; keep raster order
  double noise_sigma = 0.01;
  std::vector<double> wavelengths = default_wavelengths();
  std::uint64_t seed = 1;
  double background_reflectance = 0.98;
  Rgb background_color{0.92, 0.92, 0.92};
  int n_frames = 241;
  double frame_interval_s = 30.0;
  void validate() const;
};

// Pixels whose centre lies within the disk radius.
LabelMap planted_labels(const SceneSpec &scene);

// Disks rendered with their spectra plus Gaussian noise, clipped to (0, 1).
HyperCube synth_cube(const SceneSpec &scene);

struct SynthFrames {
  FrameSequence frames;
  std::vector<double> planted_i_c; // raw RGB channels, px * hr
};
SynthFrames synth_frames(const SceneSpec &scene);

// Analytic index of a disk's drift (continuous, before 8-bit rounding).
double planted_instability(const DiskSpec &disk, std::size_t pixels, double duration_h,
                           double first_step_h);

// Camera colour distortion applied to chart patches.
Rgb camera_response(const Rgb &true_rgb);

struct SynthChart {
  ColorChart chart;
  RgbFrame image;
  std::vector<Rgb> true_rgb;
};
// 28 patches on a 7 x 4 grid.
SynthChart synth_chart();

struct PrintJob {
  SceneSpec scene;
  int rows = 0;
  int cols = 0;
  PlateCalibration calibration;
  std::string gcode;
  PumpTrace pump;
  CompositionMap planted; // analytic x and windows per label
};

// rows x cols disks deposited in serpentine order while the MA fraction ramps
// linearly from 0 to 1 over the print. Band gap follows eg_lo + (eg_hi -
// eg_lo) * x.
struct PrintJobOptions {
  int rows = 10;
  int cols = 20;
  int pitch_px = 36;
  double radius_px = 14.0;
  double mm_per_px = 0.125;
  double feed_mm_min = 2280.0;
  double eg_lo = 1.52;
  double eg_hi = 1.62;
  double noise_sigma = 0.01;
  double wavelength_step_nm = 5.0;
  std::uint64_t seed = 1;
};
PrintJob serpentine_job(const PrintJobOptions &opt);

// Expert table consistent with a print job: expert_eg near the planted gap,
// auto_eg with extraction-like scatter, post_eg shifted or missing for the
// strongly drifting disks, i_c from the planted drift.
std::vector<ExpertRecord> synth_expert_records(const PrintJob &job);

} // namespace autochar
