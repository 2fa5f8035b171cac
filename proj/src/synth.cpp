#include "autochar/synth.hpp"

#include "autochar/bandgap.hpp"
#include "autochar/csv.hpp"
#include "autochar/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace autochar {

double synth_tauc_value(double e_g, double e) {
  const double d = e - e_g;
  if (d <= 0.0)
    return 0.0;
  if (d <= kSynthEdgeWidth)
    return kSynthSlope * d;
  return kSynthSlope *
         (kSynthEdgeWidth + kSynthRolloff * std::tanh((d - kSynthEdgeWidth) / kSynthRolloff));
}

std::vector<double> default_wavelengths(double step) {
  if (!(step > 0.0))
    throw DomainError("wavelength step must be positive");
  std::vector<double> wl;
  const auto n = static_cast<int>(std::floor((1020.0 - 380.0) / step + 1e-9));
  for (int i = 0; i <= n; ++i)
    wl.push_back(380.0 + step * i);
  return wl;
}

std::vector<double> synth_reflectance(double e_g, std::span<const double> wl) {
  if (wl.empty())
    throw DomainError("synth_reflectance: no wavelengths");
  const auto [lo, hi] = std::minmax_element(wl.begin(), wl.end());
  if (!(e_g > 1240.0 / *hi && e_g < 1240.0 / *lo))
    throw DomainError("planted band gap " + format_double(e_g) +
                      " eV outside the wavelength energy range");
  std::vector<double> r(wl.size());
  for (std::size_t i = 0; i < wl.size(); ++i) {
    const double e = 1240.0 / wl[i];
    const double f = std::sqrt(synth_tauc_value(e_g, e)) / e;
    r[i] = 1.0 + f - std::sqrt(f * f + 2.0 * f);
  }
  return r;
}

void SceneSpec::validate() const {
  if (width <= 0 || height <= 0)
    throw DomainError("scene needs positive dimensions");
  if (!(noise_sigma >= 0.0))
    throw DomainError("noise sigma must be >= 0");
  if (n_frames < 2 || !(frame_interval_s > 0.0))
    throw DomainError("scene needs >= 2 frames at a positive interval");
  for (const auto &d : disks) {
    if (!(d.radius > 0.0))
      throw DomainError("disk radius must be positive");
    if (d.e_g < 1.3 || d.e_g > 2.6)
      throw DomainError("planted band gap must lie in [1.3, 2.6] eV");
  }
}

LabelMap planted_labels(const SceneSpec &scene) {
  scene.validate();
  LabelMap labels(scene.width, scene.height, 0);
  for (std::size_t i = 0; i < scene.disks.size(); ++i) {
    const auto &d = scene.disks[i];
    const int x0 = std::max(0, static_cast<int>(std::floor(d.cx - d.radius)));
    const int x1 = std::min(scene.width - 1, static_cast<int>(std::ceil(d.cx + d.radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(d.cy - d.radius)));
    const int y1 = std::min(scene.height - 1, static_cast<int>(std::ceil(d.cy + d.radius)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x + 0.5 - d.cx, dy = y + 0.5 - d.cy;
        if (dx * dx + dy * dy <= d.radius * d.radius)
          labels.at(x, y) = static_cast<std::int32_t>(i + 1);
      }
  }
  return labels;
}

HyperCube synth_cube(const SceneSpec &scene) {
  const LabelMap labels = planted_labels(scene);
  const std::size_t bands = scene.wavelengths.size();
  std::vector<std::vector<double>> spectra;
  for (const auto &d : scene.disks)
    spectra.push_back(synth_reflectance(d.e_g, scene.wavelengths));
  const std::size_t npx = labels.data.size();
  std::vector<float> values(npx * bands);
  std::mt19937_64 rng(scene.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr double lo = 1e-6, hi = 1.0 - 1e-6;
  for (std::size_t p = 0; p < npx; ++p) {
    const int label = labels.data[p];
    for (std::size_t b = 0; b < bands; ++b) {
      const double base = label > 0 ? spectra[static_cast<std::size_t>(label - 1)][b]
                                    : scene.background_reflectance;
      const double v = base + scene.noise_sigma * noise(rng);
      values[b * npx + p] = static_cast<float>(std::clamp(v, lo, hi));
    }
  }
  return HyperCube(scene.width, scene.height, scene.wavelengths, std::move(values));
}

double planted_instability(const DiskSpec &d, std::size_t pixels, double duration_h,
                           double first_step_h) {
  const double sum = std::abs(d.drift[0]) + std::abs(d.drift[1]) + std::abs(d.drift[2]);
  const double area = d.step_drift ? sum * (duration_h - first_step_h / 2.0)
                                   : sum * duration_h / 2.0;
  return static_cast<double>(pixels) * area;
}

SynthFrames synth_frames(const SceneSpec &scene) {
  const LabelMap labels = planted_labels(scene);
  std::vector<std::size_t> counts(scene.disks.size(), 0);
  for (auto v : labels.data)
    if (v > 0)
      ++counts[static_cast<std::size_t>(v - 1)];
  auto q = [](double c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
  };
  const double total_s = (scene.n_frames - 1) * scene.frame_interval_s;
  std::vector<RgbFrame> frames;
  for (int f = 0; f < scene.n_frames; ++f) {
    const double t = f * scene.frame_interval_s;
    std::vector<std::array<std::uint8_t, 3>> colors;
    for (const auto &d : scene.disks) {
      const double s = d.step_drift ? (f > 0 ? 1.0 : 0.0) : t / total_s;
      colors.push_back({q(d.color0.r + s * d.drift[0]), q(d.color0.g + s * d.drift[1]),
                        q(d.color0.b + s * d.drift[2])});
    }
    const std::array<std::uint8_t, 3> bg{q(scene.background_color.r),
                                         q(scene.background_color.g),
                                         q(scene.background_color.b)};
    std::vector<std::uint8_t> rgb(labels.data.size() * 3);
    for (std::size_t p = 0; p < labels.data.size(); ++p) {
      const auto &c = labels.data[p] > 0
                          ? colors[static_cast<std::size_t>(labels.data[p] - 1)]
                          : bg;
      std::copy(c.begin(), c.end(), rgb.begin() + 3 * p);
    }
    frames.emplace_back(scene.width, scene.height, t, std::move(rgb));
  }
  SynthFrames out;
  out.frames = FrameSequence(std::move(frames));
  const double dur_h = total_s / 3600.0;
  for (std::size_t i = 0; i < scene.disks.size(); ++i)
    out.planted_i_c.push_back(planted_instability(scene.disks[i], counts[i], dur_h,
                                                  scene.frame_interval_s / 3600.0));
  return out;
}

Rgb camera_response(const Rgb &c) {
  auto ch = [](double v, double o1, double o2) {
    return std::clamp(0.04 + 0.86 * std::pow(v, 1.15) + 0.05 * o1 + 0.02 * o2, 0.0, 1.0);
  };
  return {ch(c.r, c.g, c.b), ch(c.g, c.b, c.r), ch(c.b, c.r, c.g)};
}

SynthChart synth_chart() {
  constexpr double levels[4] = {0.1, 0.35, 0.6, 0.85};
  constexpr int cols = 7, rows = 4, box = 40, gap = 8;
  const int width = cols * (box + gap) + gap, height = rows * (box + gap) + gap;
  SynthChart out;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3, 20);
  for (int i = 0; i < cols * rows; ++i) {
    const Rgb truth{levels[i % 4], levels[(i / 4) % 4], levels[(i + i / 16) % 4]};
    const Rgb cam = camera_response(truth);
    const std::uint8_t q[3] = {
        static_cast<std::uint8_t>(std::lround(cam.r * 255.0)),
        static_cast<std::uint8_t>(std::lround(cam.g * 255.0)),
        static_cast<std::uint8_t>(std::lround(cam.b * 255.0))};
    ChartPatch p;
    p.id = i + 1;
    p.x0 = gap + (i % cols) * (box + gap);
    p.y0 = gap + (i / cols) * (box + gap);
    p.x1 = p.x0 + box;
    p.y1 = p.y0 + box;
    p.measured = {q[0] / 255.0, q[1] / 255.0, q[2] / 255.0};
    p.reference = srgb_to_xyz(truth);
    for (int y = p.y0; y < p.y1; ++y)
      for (int x = p.x0; x < p.x1; ++x)
        std::copy(q, q + 3, rgb.begin() + 3 * (static_cast<std::size_t>(y) * width + x));
    out.chart.patches.push_back(p);
    out.true_rgb.push_back(truth);
  }
  out.image = RgbFrame(width, height, 0.0, std::move(rgb));
  out.chart.validate();
  return out;
}

PrintJob serpentine_job(const PrintJobOptions &opt) {
  if (opt.rows < 1 || opt.cols < 2 || opt.pitch_px < 8 || !(opt.radius_px > 0.0) ||
      2.0 * opt.radius_px + 3.0 > opt.pitch_px)
    throw DomainError("serpentine job: invalid layout");
  PrintJob job;
  job.rows = opt.rows;
  job.cols = opt.cols;
  const double off_mm = 5.0;
  job.calibration = PlateCalibration({opt.mm_per_px, 0, off_mm, 0, opt.mm_per_px, off_mm});

  SceneSpec &sc = job.scene;
  sc.width = opt.cols * opt.pitch_px;
  sc.height = opt.rows * opt.pitch_px;
  sc.noise_sigma = opt.noise_sigma;
  sc.wavelengths = default_wavelengths(opt.wavelength_step_nm);
  sc.seed = opt.seed;

  std::mt19937_64 rng(opt.seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double v = opt.feed_mm_min / 60.0;
  const double pitch_mm = opt.pitch_px * opt.mm_per_px;
  auto col_x_mm = [&](int c) { return (opt.pitch_px / 2.0 + c * opt.pitch_px) * opt.mm_per_px + off_mm; };
  auto row_y_mm = [&](int r) { return (opt.pitch_px / 2.0 + r * opt.pitch_px) * opt.mm_per_px + off_mm; };

  std::ostringstream g;
  g << "; serpentine raster " << opt.rows << " x " << opt.cols << "\n";
  g << "G1 F" << format_double(opt.feed_mm_min) << "\n";
  g << "G0 X" << format_double(col_x_mm(0)) << " Y" << format_double(row_y_mm(0)) << "\n";
  const double t0 = std::hypot(col_x_mm(0), row_y_mm(0)) / v;
  const double row_len = (opt.cols - 1) * pitch_mm;
  std::vector<double> row_start(opt.rows);
  double t = t0;
  for (int r = 0; r < opt.rows; ++r) {
    row_start[r] = t;
    const int end_col = r % 2 == 0 ? opt.cols - 1 : 0;
    g << "G1 X" << format_double(col_x_mm(end_col)) << " Y" << format_double(row_y_mm(r))
      << "\n";
    t += row_len / v;
    if (r + 1 < opt.rows) {
      g << "G1 X" << format_double(col_x_mm(end_col)) << " Y"
        << format_double(row_y_mm(r + 1)) << "\n";
      t += pitch_mm / v;
    }
  }
  job.gcode = g.str();
  const double duration = t;

  const int n = opt.rows * opt.cols;
  const double interval = duration / n;
  for (int r = 0; r < opt.rows; ++r)
    for (int c = 0; c < opt.cols; ++c) {
      DiskSpec d;
      const bool interior = c > 0 && c + 1 < opt.cols;
      d.cx = opt.pitch_px / 2.0 + c * opt.pitch_px + (interior ? jitter(rng) : 0.0);
      d.cy = opt.pitch_px / 2.0 + r * opt.pitch_px;
      d.radius = opt.radius_px + 1.5 * jitter(rng);
      // Time the head passes over the disk centre.
      const double start_x = col_x_mm(r % 2 == 0 ? 0 : opt.cols - 1);
      const double cx_mm = d.cx * opt.mm_per_px + off_mm;
      const double tc = row_start[r] + std::abs(cx_mm - start_x) / v;
      const double ta = std::clamp(tc - interval / 2.0, 0.0, duration);
      const double tb = std::clamp(tc + interval / 2.0, 0.0, duration);
      const double x = (ta + tb) / 2.0 / duration;
      d.e_g = opt.eg_lo + (opt.eg_hi - opt.eg_lo) * x;
      const double mag = (0.05 + 0.45 * x) * (0.5 + unit(rng));
      d.drift = {0.75 * mag, 0.65 * mag, 0.1 * mag};
      d.step_drift = unit(rng) < 0.1;
      sc.disks.push_back(d);
      job.planted.push_back({r * opt.cols + c + 1, x, ta, tb});
    }

  std::vector<PumpSample> pump;
  const int steps = 40;
  for (int k = 0; k <= steps; ++k) {
    const double s = static_cast<double>(k) / steps;
    pump.push_back({k == steps ? duration : duration * s, 2.0 * (1.0 - s), 2.0 * s});
  }
  job.pump = PumpTrace(std::move(pump));
  sc.validate();
  return job;
}

std::vector<ExpertRecord> synth_expert_records(const PrintJob &job) {
  const LabelMap labels = planted_labels(job.scene);
  std::vector<std::size_t> counts(job.scene.disks.size(), 0);
  for (auto v : labels.data)
    if (v > 0)
      ++counts[static_cast<std::size_t>(v - 1)];
  const double dur_h = (job.scene.n_frames - 1) * job.scene.frame_interval_s / 3600.0;
  std::mt19937_64 rng(job.scene.seed ^ 0xe4e7ULL);
  std::normal_distribution<double> expert_noise(0.0, 0.003);
  std::normal_distribution<double> auto_noise(0.0, 0.007);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ExpertRecord> out;
  for (std::size_t i = 0; i < job.scene.disks.size(); ++i) {
    const auto &d = job.scene.disks[i];
    ExpertRecord r;
    r.region_id = job.planted[i].region_id;
    r.x = job.planted[i].x;
    r.expert_eg = d.e_g + expert_noise(rng);
    r.auto_eg = r.expert_eg + auto_noise(rng);
    r.i_c = planted_instability(d, counts[i], dur_h, job.scene.frame_interval_s / 3600.0);
    const double mag = d.drift[0] + d.drift[1] + d.drift[2];
    // Strong drift usually means a shifted or vanished gap; a few flips keep
    // the classes from separating perfectly.
    bool degraded = mag > 0.55;
    if (unit(rng) < 0.06)
      degraded = !degraded;
    if (!degraded)
      r.post_eg = d.e_g + expert_noise(rng);
    else if (unit(rng) < 0.3)
      r.post_eg.reset();
    else
      r.post_eg = d.e_g + 0.05 + 0.05 * unit(rng);
    out.push_back(r);
  }
  return out;
}

} // namespace autochar
