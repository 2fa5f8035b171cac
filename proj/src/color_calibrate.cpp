#include "autochar/color_calibrate.hpp"

#include "autochar/csv.hpp"
#include "autochar/error.hpp"
#include "autochar/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace autochar {

namespace {

double srgb_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

constexpr double kEps = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double lab_f(double t) { return t > kEps ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

} // namespace

Xyz srgb_to_xyz(const Rgb &rgb) {
  const double r = srgb_linear(std::clamp(rgb.r, 0.0, 1.0));
  const double g = srgb_linear(std::clamp(rgb.g, 0.0, 1.0));
  const double b = srgb_linear(std::clamp(rgb.b, 0.0, 1.0));
  // D65
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  // Bradford D65 -> D50
  return {1.0478112 * x + 0.0228866 * y - 0.0501270 * z,
          0.0295424 * x + 0.9904844 * y - 0.0170491 * z,
          -0.0092345 * x + 0.0150436 * y + 0.7521316 * z};
}

Lab xyz_to_lab(const Xyz &xyz, const Xyz &white) {
  const double fx = lab_f(xyz.X / white.X);
  const double fy = lab_f(xyz.Y / white.Y);
  const double fz = lab_f(xyz.Z / white.Z);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Xyz lab_to_xyz(const Lab &lab, const Xyz &white) {
  const double fy = (lab.L + 16.0) / 116.0;
  const double fx = fy + lab.a / 500.0;
  const double fz = fy - lab.b / 200.0;
  const double fx3 = fx * fx * fx, fz3 = fz * fz * fz;
  const double xr = fx3 > kEps ? fx3 : (116.0 * fx - 16.0) / kKappa;
  const double yr = lab.L > kKappa * kEps ? fy * fy * fy : lab.L / kKappa;
  const double zr = fz3 > kEps ? fz3 : (116.0 * fz - 16.0) / kKappa;
  return {xr * white.X, yr * white.Y, zr * white.Z};
}

void ColorChart::validate() const {
  if (patches.size() < 5)
    throw DomainError("colour chart needs at least 5 patches, got " +
                      std::to_string(patches.size()));
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto &p = patches[i];
    for (double v : {p.measured.r, p.measured.g, p.measured.b, p.reference.X,
                     p.reference.Y, p.reference.Z})
      if (!std::isfinite(v))
        throw DomainError("colour chart patch " + std::to_string(p.id) +
                          " has a non-finite value");
    for (std::size_t j = 0; j < i; ++j) {
      const auto &q = patches[j].measured;
      if (q.r == p.measured.r && q.g == p.measured.g && q.b == p.measured.b)
        throw FitError("colour chart patches " + std::to_string(patches[j].id) +
                       " and " + std::to_string(p.id) +
                       " have identical measured colours");
    }
  }
}

double tps_kernel(TpsKernel kernel, double r) {
  if (kernel == TpsKernel::Linear)
    return r;
  return r > 0.0 ? r * r * std::log(r) : 0.0;
}

TpsModel::TpsModel(std::vector<Lab> controls,
                   std::vector<std::array<double, 3>> weights,
                   std::array<std::array<double, 3>, 4> affine, TpsKernel kernel)
    : controls_(std::move(controls)), weights_(std::move(weights)),
      affine_(affine), kernel_(kernel) {
  if (controls_.size() != weights_.size())
    throw DomainError("TPS model: controls and weights differ in count");
}

Xyz TpsModel::evaluate(const Lab &p) const {
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k)
    out[k] = affine_[0][k] + affine_[1][k] * p.L + affine_[2][k] * p.a +
             affine_[3][k] * p.b;
  for (std::size_t i = 0; i < controls_.size(); ++i) {
    const auto &c = controls_[i];
    const double u = tps_kernel(
        kernel_, std::sqrt((p.L - c.L) * (p.L - c.L) + (p.a - c.a) * (p.a - c.a) +
                           (p.b - c.b) * (p.b - c.b)));
    for (int k = 0; k < 3; ++k)
      out[k] += weights_[i][k] * u;
  }
  return {out[0], out[1], out[2]};
}

double TpsModel::side_condition_residual() const {
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    for (std::size_t i = 0; i < controls_.size(); ++i) {
      s0 += weights_[i][k];
      s1 += controls_[i].L * weights_[i][k];
      s2 += controls_[i].a * weights_[i][k];
      s3 += controls_[i].b * weights_[i][k];
    }
    worst = std::max({worst, std::abs(s0), std::abs(s1), std::abs(s2), std::abs(s3)});
  }
  return worst;
}

TpsModel fit_tps(const ColorChart &chart, TpsKernel kernel) {
  chart.validate();
  const std::size_t n = chart.patches.size();
  std::vector<Lab> ctrl(n);
  for (std::size_t i = 0; i < n; ++i)
    ctrl[i] = srgb_to_lab(chart.patches[i].measured);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (ctrl[i].L == ctrl[j].L && ctrl[i].a == ctrl[j].a && ctrl[i].b == ctrl[j].b)
        throw FitError("colour chart patches " + std::to_string(chart.patches[j].id) +
                       " and " + std::to_string(chart.patches[i].id) +
                       " map to the same CIELAB point");

  const Eigen::Index m = static_cast<Eigen::Index>(n) + 4;
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double dl = ctrl[i].L - ctrl[j].L, da = ctrl[i].a - ctrl[j].a,
                   db = ctrl[i].b - ctrl[j].b;
      sys(ii, static_cast<Eigen::Index>(j)) =
          tps_kernel(kernel, std::sqrt(dl * dl + da * da + db * db));
    }
    const double prow[4] = {1.0, ctrl[i].L, ctrl[i].a, ctrl[i].b};
    for (int k = 0; k < 4; ++k) {
      sys(ii, static_cast<Eigen::Index>(n) + k) = prow[k];
      sys(static_cast<Eigen::Index>(n) + k, ii) = prow[k];
    }
    const auto &v = chart.patches[i].reference;
    rhs(ii, 0) = v.X;
    rhs(ii, 1) = v.Y;
    rhs(ii, 2) = v.Z;
  }

  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
  if (!lu.isInvertible())
    throw FitError("TPS system is singular (control points degenerate)");
  Eigen::MatrixXd sol = lu.solve(rhs);
  for (int it = 0; it < 3; ++it)
    sol += lu.solve(rhs - sys * sol);
  if (!sol.allFinite())
    throw FitError("TPS solve produced non-finite coefficients");

  std::vector<std::array<double, 3>> w(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k)
      w[i][k] = sol(static_cast<Eigen::Index>(i), k);
  std::array<std::array<double, 3>, 4> a{};
  for (int r = 0; r < 4; ++r)
    for (int k = 0; k < 3; ++k)
      a[r][k] = sol(static_cast<Eigen::Index>(n) + r, k);
  return TpsModel(std::move(ctrl), std::move(w), a, kernel);
}

CalibratedFrame calibrate_frame(const RgbFrame &frame, const TpsModel &model) {
  CalibratedFrame out;
  out.width = frame.width();
  out.height = frame.height();
  out.timestamp_s = frame.timestamp_s();
  out.pixels.resize(static_cast<std::size_t>(frame.width()) * frame.height());
  const auto rows = static_cast<std::size_t>(frame.height());
  parallel_for(rows, [&](std::size_t y) {
    for (int x = 0; x < frame.width(); ++x)
      out.pixels[y * frame.width() + x] =
          model.evaluate(frame.pixel(x, static_cast<int>(y)));
  });
  return out;
}

ColorChart load_chart(const std::filesystem::path &csv,
                      const std::filesystem::path &reference_image) {
  const CsvTable t = read_csv(csv);
  const RgbFrame img = load_frame_png(reference_image, 0.0);
  const std::string ctx = csv.string();
  const auto cid = t.column("patch_id"), cx0 = t.column("x0"), cy0 = t.column("y0"),
             cx1 = t.column("x1"), cy1 = t.column("y1"), cX = t.column("ref_X"),
             cY = t.column("ref_Y"), cZ = t.column("ref_Z");
  ColorChart chart;
  for (const auto &row : t.rows) {
    ChartPatch p;
    p.id = static_cast<int>(parse_int(row[cid], ctx));
    p.x0 = static_cast<int>(parse_int(row[cx0], ctx));
    p.y0 = static_cast<int>(parse_int(row[cy0], ctx));
    p.x1 = static_cast<int>(parse_int(row[cx1], ctx));
    p.y1 = static_cast<int>(parse_int(row[cy1], ctx));
    p.reference = {parse_double(row[cX], ctx), parse_double(row[cY], ctx),
                   parse_double(row[cZ], ctx)};
    if (p.x0 < 0 || p.y0 < 0 || p.x1 > img.width() || p.y1 > img.height() ||
        p.x0 >= p.x1 || p.y0 >= p.y1)
      throw FormatError(ctx + ": patch " + std::to_string(p.id) +
                        " box outside the reference image");
    double r = 0, g = 0, b = 0;
    for (int y = p.y0; y < p.y1; ++y)
      for (int x = p.x0; x < p.x1; ++x) {
        const Rgb c = img.pixel(x, y);
        r += c.r;
        g += c.g;
        b += c.b;
      }
    const double n = static_cast<double>(p.x1 - p.x0) * (p.y1 - p.y0);
    p.measured = {r / n, g / n, b / n};
    chart.patches.push_back(p);
  }
  chart.validate();
  return chart;
}

void save_chart_csv(const ColorChart &chart, const std::filesystem::path &csv) {
  CsvWriter w({"patch_id", "x0", "y0", "x1", "y1", "ref_X", "ref_Y", "ref_Z"});
  for (const auto &p : chart.patches)
    w.row({std::to_string(p.id), std::to_string(p.x0), std::to_string(p.y0),
           std::to_string(p.x1), std::to_string(p.y1), format_double(p.reference.X),
           format_double(p.reference.Y), format_double(p.reference.Z)});
  w.save(csv);
}

} // namespace autochar
