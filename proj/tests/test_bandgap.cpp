#include "autochar/bandgap.hpp"
#include "autochar/error.hpp"
#include "autochar/synth.hpp"
#include "autochar/vision_segment.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace autochar;

namespace {

TaucCurve curve_from(std::vector<double> e, std::vector<double> v) {
  TaucCurve c;
  c.energies = std::move(e);
  c.values = std::move(v);
  return c;
}

TaucCurve sampled(double lo, double hi, int n, double (*f)(double)) {
  TaucCurve c;
  for (int i = 0; i < n; ++i) {
    const double e = lo + (hi - lo) * i / (n - 1);
    c.energies.push_back(e);
    c.values.push_back(f(e));
  }
  return c;
}

// R^2 from raw definitions in long double.
long double r2_oracle(const TaucCurve &c, IndexRange r, long double slope, long double icpt) {
  long double mean = 0;
  for (auto i = r.first; i < r.last; ++i)
    mean += c.values[i];
  mean /= r.size();
  long double res = 0, tot = 0;
  for (auto i = r.first; i < r.last; ++i) {
    const long double yhat = slope * c.energies[i] + icpt;
    res += (c.values[i] - yhat) * (c.values[i] - yhat);
    tot += (c.values[i] - mean) * (c.values[i] - mean);
  }
  return tot == 0 ? 1.0L : 1.0L - res / tot;
}

std::vector<std::vector<float>> noisy_pixels(double e_g, const std::vector<double> &wl,
                                             int n, double sigma, std::uint64_t seed) {
  const auto r = synth_reflectance(e_g, wl);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0, sigma);
  std::vector<std::vector<float>> px(n, std::vector<float>(wl.size()));
  for (auto &p : px)
    for (std::size_t b = 0; b < wl.size(); ++b)
      p[b] = static_cast<float>(std::clamp(r[b] + noise(rng), 1e-6, 1 - 1e-6));
  return px;
}

} // namespace

TEST_CASE("kubelka-munk values") {
  CHECK(kubelka_munk(1.0) == 0.0);
  CHECK(kubelka_munk(0.5) == doctest::Approx(0.25));
  CHECK(kubelka_munk(0.1) == doctest::Approx(4.05));
  CHECK(kubelka_munk(0.0) == doctest::Approx(kubelka_munk(1e-4)));
  CHECK(kubelka_munk(1.3) == 0.0);
}

TEST_CASE("tauc transform") {
  const std::vector<double> wl{620.0, 700.0};
  const std::vector<double> r{0.5, 0.9};
  const auto c = tauc_transform(wl, r, 0.5);
  REQUIRE(c.size() == 2);
  CHECK(c.energies[1] == doctest::Approx(2.0));
  CHECK(c.values[1] == doctest::Approx(0.25));
  CHECK(c.energies[0] < c.energies[1]);

  const std::vector<double> ones(2, 1.0);
  const auto flat = tauc_transform(wl, ones);
  CHECK(flat.values == std::vector<double>{0.0, 0.0});

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const auto grid = default_wavelengths(5.0);
  std::vector<double> refl(grid.size());
  for (auto &v : refl)
    v = u(rng);
  const auto rc = tauc_transform(grid, refl);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t k = grid.size() - 1 - i;
    const double e = 1240.0 / grid[i];
    CHECK(rc.energies[k] == doctest::Approx(e));
    CHECK(rc.values[k] == doctest::Approx(std::pow(kubelka_munk(refl[i]) * e, 2.0)));
  }
  CHECK(tauc_transform(wl, r, 2.0).values[1] == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(tauc_transform(std::vector<double>{}, std::vector<double>{}), DomainError);
}

TEST_CASE("line fit statistics match the two-pass oracle") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 0.3);
  TaucCurve c;
  for (int i = 0; i < 40; ++i) {
    c.energies.push_back(1.5 + 0.01 * i);
    c.values.push_back(3.0 * i + n(rng));
  }
  for (IndexRange r : {IndexRange{0, 40}, IndexRange{3, 9}, IndexRange{20, 22}}) {
    const auto f = fit_line(c, r);
    CHECK(f.r2 == doctest::Approx(static_cast<double>(r2_oracle(c, r, f.slope, f.intercept))).epsilon(1e-12));
  }
  const auto flat = curve_from({1, 2, 3}, {5, 5, 5});
  CHECK(fit_line(flat, {0, 3}).r2 == 1.0);
  double rmse = window_rmse(c, 2.0, 1.0, 0, 10);
  CHECK(rmse > 0);
  const auto line = curve_from({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(window_rmse(line, 2.0, 1.0, 0, 10) == 0.0);
}

TEST_CASE("recursive segmentation") {
  const auto lin = sampled(1.0, 3.0, 50, [](double e) { return 2 * e - 1; });
  CHECK(recursive_segment(lin).size() == 1);

  const auto vee = sampled(0.0, 63.0, 64, [](double e) { return std::abs(e - 20.5); });
  const auto segs = recursive_segment(vee);
  std::size_t next = 0;
  for (const auto &s : segs) {
    CHECK(s.first == next);
    next = s.last;
    const bool ok = fit_line(vee, s).r2 >= 0.990 || s.size() <= 5;
    CHECK(ok);
  }
  CHECK(next == 64);

  const auto four = sampled(0.0, 3.0, 4, [](double e) { return e * e; });
  REQUIRE(recursive_segment(four).size() == 1);
  CHECK(recursive_segment(four)[0] == IndexRange{0, 4});
}

TEST_CASE("recursive split gives the left half the extra point") {
  const auto c = sampled(0.0, 10.0, 11, [](double e) { return e < 5.5 ? 0.0 : 10.0 * (e - 5.5); });
  const auto segs = recursive_segment(c, 0.99, 5);
  REQUIRE(segs.size() >= 2);
  CHECK(segs[0] == IndexRange{0, 6});
}

TEST_CASE("peak detection") {
  const auto mono = sampled(1.0, 3.0, 201, [](double e) { return e - 1.0; });
  auto p = detect_peaks(mono);
  REQUIRE(p.size() == 1);
  CHECK(p[0].terminal);
  CHECK(p[0].index == 200);
  CHECK(p[0].width == doctest::Approx(2.0)); // left half crossing at E = 2

  const auto tri = sampled(1.0, 3.0, 201, [](double e) { return std::max(0.0, 1.0 - std::abs(e - 2.0) / 0.2); });
  p = detect_peaks(tri);
  REQUIRE(p.size() == 1);
  CHECK(!p[0].terminal);
  CHECK(p[0].energy == doctest::Approx(2.0));
  CHECK(p[0].prominence == doctest::Approx(1.0));
  CHECK(p[0].width == doctest::Approx(0.2));

  const auto two = sampled(1.0, 3.0, 201, [](double e) {
    return std::max(0.0, 1.0 - std::abs(e - 1.6) / 0.2) +
           std::max(0.0, 0.01 - std::abs(e - 2.5) / 20.0);
  });
  p = detect_peaks(two);
  REQUIRE(p.size() == 1);
  CHECK(p[0].energy == doctest::Approx(1.6));

  CHECK(detect_peaks(curve_from({1, 2}, {0, 1})).empty());
  CHECK(detect_peaks(curve_from({1, 2, 3}, {1, 1, 1})).empty());
}

TEST_CASE("candidate scoring rules") {
  // Rising edge from 1.5 eV, flat top; a falling tail adds negative-slope pairs.
  const auto c = sampled(1.0, 3.0, 201, [](double e) {
    if (e < 1.5) return 0.0;
    if (e < 2.0) return 10.0 * (e - 1.5);
    if (e < 2.5) return 5.0;
    return 5.0 - 4.0 * (e - 2.5);
  });
  const auto segs = recursive_segment(c);
  const auto peaks = detect_peaks(c);
  const auto cands = score_candidates(c, segs, peaks);
  REQUIRE(!cands.empty());
  for (const auto &k : cands) {
    CHECK(k.line.slope > 0);
    CHECK(k.e_g >= c.energies.front());
    CHECK(k.e_g <= c.energies.back());
    CHECK(k.window_points > 0);
    CHECK(k.rmse == doctest::Approx(window_rmse(c, k.line.slope, k.line.intercept, k.window_lo, k.window_hi)));
  }
  const auto best = extract_bandgap(c);
  CHECK(best.n_candidates == cands.size());
  for (const auto &k : cands)
    CHECK(best.rmse <= k.rmse);
  // The edge is one segment here, so the winner pairs it with the flat base.
  REQUIRE(segs.size() == 4);
  const auto pair = fit_line(c, {segs[0].first, segs[1].last});
  CHECK(best.e_g == doctest::Approx(pair.x_intercept()).epsilon(1e-12));
  CHECK(best.e_g < 1.5);
  CHECK_THROWS_AS(score_candidates(c, {}, peaks), DomainError);
}

TEST_CASE("flat spectra have no fit") {
  const auto wl = default_wavelengths(5.0);
  const std::vector<std::vector<float>> flat(4, std::vector<float>(wl.size(), 0.4f));
  CHECK_THROWS_AS(extract_bandgap(wl, flat), NoFitError);
  const auto dec = sampled(1.0, 3.0, 100, [](double e) { return 3.0 - e; });
  CHECK_THROWS_AS(extract_bandgap(dec), NoFitError);
}

TEST_CASE("planted band gap is recovered from a noisy region") {
  const auto wl = default_wavelengths(2.0);
  std::uint64_t seed = 17;
  for (double eg : {1.45, 1.60, 1.95}) {
    const auto px = noisy_pixels(eg, wl, 800, 0.01, seed++);
    const auto res = extract_bandgap(wl, px);
    CHECK(std::abs(res.e_g - eg) <= 0.01);
    CHECK(res.e_g == doctest::Approx(-res.line.intercept / res.line.slope));
    CHECK(res.line.slope > 0);
  }
}

TEST_CASE("scale invariance of the band gap") {
  const auto wl = default_wavelengths(2.0);
  const auto med = median_spectrum(noisy_pixels(1.7, wl, 300, 0.01, 5));
  auto c = tauc_transform(wl, med);
  const auto a = extract_bandgap(c);
  for (double s : {0.01, 3.0, 250.0}) {
    TaucCurve scaled = c;
    for (auto &v : scaled.values)
      v *= s;
    const auto b = extract_bandgap(scaled);
    CHECK(b.e_g == doctest::Approx(a.e_g).epsilon(1e-9));
    CHECK(b.rmse == doctest::Approx(a.rmse * s).epsilon(1e-9));
  }
}

TEST_CASE("median spectrum") {
  const std::vector<std::vector<float>> s{{1, 10}, {3, 30}, {2, 20}, {9, 0}};
  const auto m = median_spectrum(s);
  CHECK(m[0] == doctest::Approx(2.5));
  CHECK(m[1] == doctest::Approx(15.0));
  CHECK(median_spectrum({{1, 2}, {5, 0}, {3, 7}}) == std::vector<double>{3, 2});
  CHECK_THROWS_AS(median_spectrum({}), DomainError);
  CHECK_THROWS_AS(median_spectrum({{1, 2}, {1}}), DomainError);

  const auto wl = default_wavelengths(5.0);
  auto px = noisy_pixels(1.65, wl, 101, 0.01, 8);
  const auto a = extract_bandgap(wl, px);
  std::mt19937_64 rng(1);
  std::shuffle(px.begin(), px.end(), rng);
  CHECK(extract_bandgap(wl, px).e_g == a.e_g);
}

TEST_CASE("batch extraction keeps region order and reports failures") {
  SceneSpec sc;
  sc.width = 100;
  sc.height = 40;
  sc.wavelengths = default_wavelengths(5.0);
  sc.disks = {{20, 20, 14, 1.55}, {50, 20, 14, 1.75}, {80, 20, 14, 2.05}};
  const auto cube = synth_cube(sc);
  const auto seg = segment(cube);
  REQUIRE(seg.regions.size() == 3);
  CompositionMap comp{{1, 0.1, 0, 1}, {2, 0.5, 1, 2}, {3, 0.9, 2, 3}};
  const auto recs = extract_bandgaps(cube, seg.regions, &comp);
  REQUIRE(recs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(recs[i].region_id == static_cast<int>(i + 1));
    CHECK(std::abs(recs[i].result.e_g - sc.disks[i].e_g) <= 0.015);
  }
  CHECK(recs[2].x_composition == 0.9);

  TempDir tmp;
  save_bandgap_csv(recs, tmp / "bg.csv");
  CHECK(std::filesystem::file_size(tmp / "bg.csv") > 40);
  const auto svg = bandgap_fit_svg(tauc_transform(cube.wavelengths(), std::vector<double>(cube.bands(), 0.5)), recs[0].result, "r1");
  CHECK(svg.rfind("<svg", 0) == 0);

  CompositionMap partial{{1, 0.1, 0, 1}};
  CHECK_THROWS_AS(extract_bandgaps(cube, seg.regions, &partial), NoFitError);
}
