#include "autochar/color_calibrate.hpp"
#include "autochar/error.hpp"
#include "autochar/synth.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

using namespace autochar;

namespace {

double dist(const Xyz &a, const Xyz &b) {
  return std::max({std::abs(a.X - b.X), std::abs(a.Y - b.Y), std::abs(a.Z - b.Z)});
}

ColorChart random_chart(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  ColorChart c;
  for (int i = 0; i < n; ++i) {
    ChartPatch p;
    p.id = i + 1;
    p.measured = {u(rng), u(rng), u(rng)};
    p.reference = {u(rng), u(rng), u(rng)};
    c.patches.push_back(p);
  }
  return c;
}

// Builds and solves the full TPS system independently of the library.
Xyz oracle_tps(const ColorChart &chart, const Lab &probe) {
  const std::size_t n = chart.patches.size();
  std::vector<Lab> c;
  for (const auto &p : chart.patches)
    c.push_back(srgb_to_lab(p.measured));
  std::vector<std::vector<double>> a(n + 4, std::vector<double>(n + 4, 0.0));
  std::vector<std::vector<double>> b(n + 4, std::vector<double>(3, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      a[i][j] = std::hypot(c[i].L - c[j].L, c[i].a - c[j].a, c[i].b - c[j].b);
    const double row[4] = {1.0, c[i].L, c[i].a, c[i].b};
    for (int k = 0; k < 4; ++k) {
      a[i][n + k] = row[k];
      a[n + k][i] = row[k];
    }
    const auto &r = chart.patches[i].reference;
    b[i] = {r.X, r.Y, r.Z};
  }
  const auto x = oracle::gauss_solve(a, b);
  double out[3];
  for (int ch = 0; ch < 3; ++ch) {
    double v = x[n][ch] + x[n + 1][ch] * probe.L + x[n + 2][ch] * probe.a + x[n + 3][ch] * probe.b;
    for (std::size_t i = 0; i < n; ++i)
      v += x[i][ch] * std::hypot(probe.L - c[i].L, probe.a - c[i].a, probe.b - c[i].b);
    out[ch] = v;
  }
  return {out[0], out[1], out[2]};
}

} // namespace

TEST_CASE("colour space anchors") {
  const auto w = xyz_to_lab(kD50White);
  CHECK(w.L == doctest::Approx(100.0));
  CHECK(w.a == doctest::Approx(0.0));
  CHECK(w.b == doctest::Approx(0.0));
  const auto s = srgb_to_lab({1, 1, 1});
  CHECK(s.L == doctest::Approx(100.0).epsilon(1e-3));
  CHECK(std::abs(s.a) < 0.05);
  CHECK(std::abs(s.b) < 0.05);
  const auto k = srgb_to_lab({0, 0, 0});
  CHECK(k.L == doctest::Approx(0.0));
  CHECK(srgb_to_xyz({1, 1, 1}).Y == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("lab round trip") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Xyz x{u(rng), u(rng), u(rng)};
    CHECK(dist(lab_to_xyz(xyz_to_lab(x)), x) <= 1e-9);
  }
  CHECK(dist(lab_to_xyz(xyz_to_lab({0.001, 0.002, 0.0005})), {0.001, 0.002, 0.0005}) <= 1e-9);
}

TEST_CASE("tps interpolates controls and meets side conditions") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto chart = random_chart(12 + static_cast<int>(seed), seed);
    for (auto kernel : {TpsKernel::Linear, TpsKernel::ThinPlate}) {
      const auto m = fit_tps(chart, kernel);
      for (const auto &p : chart.patches)
        CHECK(dist(m.evaluate(p.measured), p.reference) <= 1e-6);
      CHECK(m.side_condition_residual() <= 1e-8);
    }
  }
}

TEST_CASE("tps matches gaussian elimination oracle off the controls") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    const auto chart = random_chart(20, seed);
    const auto m = fit_tps(chart);
    for (int k = 0; k < 20; ++k) {
      const Lab probe = srgb_to_lab({u(rng), u(rng), u(rng)});
      CHECK(dist(m.evaluate(probe), oracle_tps(chart, probe)) <= 1e-6);
    }
  }
}

TEST_CASE("tps reproduces affine maps exactly") {
  auto chart = random_chart(15, 4);
  for (auto &p : chart.patches) {
    const auto l = srgb_to_lab(p.measured);
    p.reference = {0.01 * l.L + 0.002 * l.a, 0.3 - 0.001 * l.b, 0.005 * l.L};
  }
  const auto m = fit_tps(chart);
  for (const auto &w : m.weights())
    for (double v : w)
      CHECK(std::abs(v) <= 1e-9);
  const Lab probe{55, -10, 20};
  CHECK(dist(m.evaluate(probe), {0.55 - 0.02, 0.3 - 0.02, 0.275}) <= 1e-9);
}

TEST_CASE("patch order does not matter") {
  auto chart = random_chart(18, 21);
  const auto a = fit_tps(chart);
  std::mt19937_64 rng(5);
  std::shuffle(chart.patches.begin(), chart.patches.end(), rng);
  const auto b = fit_tps(chart);
  for (const Lab p : {Lab{20, 5, -5}, Lab{70, 30, 10}, Lab{45, -20, 40}})
    CHECK(dist(a.evaluate(p), b.evaluate(p)) <= 1e-9);
}

TEST_CASE("chart validation") {
  auto chart = random_chart(6, 3);
  chart.patches[4].measured = chart.patches[1].measured;
  CHECK_THROWS_AS(fit_tps(chart), FitError);
  CHECK_THROWS_AS(random_chart(4, 1).validate(), DomainError);
  auto bad = random_chart(6, 2);
  bad.patches[0].reference.Y = std::nan("");
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("synthetic chart corrects the camera response") {
  const auto sc = synth_chart();
  REQUIRE(sc.chart.patches.size() == 28);
  const auto m = fit_tps(sc.chart);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.15, 0.8);
  double fitted = 0, raw = 0;
  for (int i = 0; i < 500; ++i) {
    const Rgb truth{u(rng), u(rng), u(rng)};
    const Rgb cam = camera_response(truth);
    fitted += dist(m.evaluate(cam), srgb_to_xyz(truth));
    raw += dist(srgb_to_xyz(cam), srgb_to_xyz(truth));
  }
  // 28 patches only sample the cube coarsely; require a clear mean gain.
  CHECK(fitted < 0.6 * raw);
  for (std::size_t i = 0; i < sc.true_rgb.size(); ++i)
    CHECK(dist(m.evaluate(sc.chart.patches[i].measured), srgb_to_xyz(sc.true_rgb[i])) <= 1e-6);
}

TEST_CASE("chart csv and image round trip") {
  const auto sc = synth_chart();
  TempDir tmp;
  save_chart_csv(sc.chart, tmp / "chart.csv");
  save_frame_png(sc.image, tmp / "chart.png");
  const auto loaded = load_chart(tmp / "chart.csv", tmp / "chart.png");
  REQUIRE(loaded.patches.size() == sc.chart.patches.size());
  for (std::size_t i = 0; i < loaded.patches.size(); ++i) {
    const auto &a = loaded.patches[i];
    const auto &b = sc.chart.patches[i];
    CHECK(a.id == b.id);
    CHECK(a.measured.r == doctest::Approx(b.measured.r).epsilon(1e-12));
    CHECK(a.measured.g == doctest::Approx(b.measured.g).epsilon(1e-12));
    CHECK(a.measured.b == doctest::Approx(b.measured.b).epsilon(1e-12));
    CHECK(dist(a.reference, b.reference) <= 1e-12);
  }
  {
    std::ofstream f(tmp / "bad.csv");
    f << "patch_id,x0,y0,x1,y1,ref_X,ref_Y,ref_Z\n1,0,0,9999,10,0.1,0.1,0.1\n";
  }
  CHECK_THROWS(load_chart(tmp / "bad.csv", tmp / "chart.png"));
}

TEST_CASE("frame calibration is pixelwise and deterministic") {
  const auto sc = synth_chart();
  const auto m = fit_tps(sc.chart);
  std::vector<std::uint8_t> px(5 * 4 * 3);
  for (std::size_t i = 0; i < px.size(); ++i)
    px[i] = static_cast<std::uint8_t>((i * 37) % 256);
  const RgbFrame frame(5, 4, 12.0, px);
  const auto a = calibrate_frame(frame, m);
  const auto b = calibrate_frame(frame, m);
  CHECK(a.timestamp_s == 12.0);
  REQUIRE(a.pixels.size() == 20);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) {
      const auto &p = a.pixels[static_cast<std::size_t>(y) * 5 + x];
      CHECK(dist(p, m.evaluate(frame.pixel(x, y))) == 0.0);
      CHECK(dist(p, b.pixels[static_cast<std::size_t>(y) * 5 + x]) == 0.0);
    }
}
