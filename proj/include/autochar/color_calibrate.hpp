#pragma once

#include "autochar/cube_io.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace autochar {

struct Lab {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct Xyz {
  double X = 0.0;
  double Y = 0.0;
  double Z = 0.0;
};

inline constexpr Xyz kD50White{0.96422, 1.0, 0.82521};

// sRGB in [0,1] -> linear -> XYZ (D65) -> Bradford -> XYZ (D50).
Xyz srgb_to_xyz(const Rgb &rgb);
Lab xyz_to_lab(const Xyz &xyz, const Xyz &white = kD50White);
Xyz lab_to_xyz(const Lab &lab, const Xyz &white = kD50White);
inline Lab srgb_to_lab(const Rgb &rgb) { return xyz_to_lab(srgb_to_xyz(rgb)); }

struct ChartPatch {
  int id = 0;
  Rgb measured;  // camera colour in [0,1]
  Xyz reference; // D50 / 2 degree
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // pixel box [x0,x1) x [y0,y1)
};

struct ColorChart {
  std::vector<ChartPatch> patches;
  // >= 5 patches, finite values, no two identical measured colours.
  void validate() const;
};

enum class TpsKernel { Linear, ThinPlate }; // U(r) = r, U(r) = r^2 log r

// f(p) = A^T [1, L, a, b] + sum_i W_i U(|p - c_i|), p in CIELAB, f in XYZ.
class TpsModel {
public:
  TpsModel() = default;
  TpsModel(std::vector<Lab> controls, std::vector<std::array<double, 3>> weights,
           std::array<std::array<double, 3>, 4> affine, TpsKernel kernel);

  Xyz evaluate(const Lab &p) const;
  Xyz evaluate(const Rgb &rgb) const { return evaluate(srgb_to_lab(rgb)); }

  const std::vector<Lab> &controls() const { return controls_; }
  const std::vector<std::array<double, 3>> &weights() const { return weights_; }
  const std::array<std::array<double, 3>, 4> &affine() const { return affine_; }
  TpsKernel kernel() const { return kernel_; }
  // max |P^T W| entry.
  double side_condition_residual() const;

private:
  std::vector<Lab> controls_;
  std::vector<std::array<double, 3>> weights_;
  std::array<std::array<double, 3>, 4> affine_{};
  TpsKernel kernel_ = TpsKernel::Linear;
};

double tps_kernel(TpsKernel kernel, double r);

// Solves [K P; P^T 0][W; A] = [V; 0]. Throws FitError for duplicate control
// points or a singular system.
TpsModel fit_tps(const ColorChart &chart, TpsKernel kernel = TpsKernel::Linear);

struct CalibratedFrame {
  int width = 0;
  int height = 0;
  double timestamp_s = 0.0;
  std::vector<Xyz> pixels; // row-major
};

CalibratedFrame calibrate_frame(const RgbFrame &frame, const TpsModel &model);

// Chart CSV: patch_id,x0,y0,x1,y1,ref_X,ref_Y,ref_Z. Measured colours are the
// box means of the reference image.
ColorChart load_chart(const std::filesystem::path &csv,
                      const std::filesystem::path &reference_image);
void save_chart_csv(const ColorChart &chart, const std::filesystem::path &csv);

} // namespace autochar
