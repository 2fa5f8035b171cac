#include "autochar/benchmark.hpp"
#include "autochar/error.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

using namespace autochar;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<bool> truth;
};

// Integer-valued scores so ties are common.
Instance random_instance(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> s(0, 6);
  std::bernoulli_distribution t(0.4);
  Instance in;
  for (std::size_t i = 0; i < n; ++i) {
    in.scores.push_back(s(rng) * 0.5);
    in.truth.push_back(t(rng));
  }
  in.truth[0] = true;
  return in;
}

double oracle_auc(const Instance &in) {
  std::vector<double> b(in.scores);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  b.insert(b.begin(), -std::numeric_limits<double>::infinity());
  struct P {
    double boundary;
    oracle::Rational prec, rec;
    double rec_d;
  };
  std::vector<P> pts;
  for (double x : b) {
    const auto c = oracle::confusion(in.scores, in.truth, x);
    const oracle::Rational prec = c.tp + c.fp == 0 ? oracle::Rational(1) : oracle::Rational(c.tp, c.tp + c.fp);
    pts.push_back({x, prec, oracle::Rational(c.tp, c.tp + c.fn),
                   static_cast<double>(c.tp) / (c.tp + c.fn)});
  }
  std::sort(pts.begin(), pts.end(), [](const P &l, const P &r) {
    return l.rec_d != r.rec_d ? l.rec_d < r.rec_d : l.boundary > r.boundary;
  });
  oracle::Rational area;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area = area + oracle::Rational(1, 2) * (pts[i].prec + pts[i - 1].prec) * (pts[i].rec - pts[i - 1].rec);
  return area.to_double();
}

ExpertRecord rec(int id, double x, double eg, std::optional<double> post, double a = 0, double ic = 0) {
  return {id, x, eg, post, a, ic};
}

} // namespace

TEST_CASE("band-gap accuracy at a tolerance") {
  std::vector<ExpertRecord> r{rec(1, 0, 1.60, {}, 1.62), rec(2, 0, 1.60, {}, 1.58),
                              rec(3, 0, 1.60, {}, 1.6201), rec(4, 0, 1.60, {}, 1.60)};
  CHECK(bandgap_accuracy(r, 0.02) == 0.75);
  CHECK(bandgap_accuracy(r, 0.0) == 0.25);
  CHECK(bandgap_accuracy(r, 0.1) == 1.0);
  CHECK_THROWS_AS(bandgap_accuracy({}, 0.02), DomainError);
  CHECK_THROWS_AS(bandgap_accuracy(r, -0.1), DomainError);
}

TEST_CASE("ground truth from the pre-degradation trend") {
  std::vector<ExpertRecord> r;
  const double dev[] = {0.0, 0.019, -0.019, 0.021, -0.03, 0.0};
  for (int i = 0; i < 6; ++i) {
    const double x = 0.2 * i;
    std::optional<double> post = 1.5 + 0.3 * x + dev[i];
    if (i == 5)
      post.reset();
    r.push_back(rec(i + 1, x, 1.5 + 0.3 * x, post));
  }
  const auto gt = ground_truth_degradation(r, 0.02);
  CHECK(!gt.at(1));
  CHECK(!gt.at(2));
  CHECK(!gt.at(3));
  CHECK(gt.at(4));
  CHECK(gt.at(5));
  CHECK(gt.at(6));
  r[1].post_eg = 1.5 + 0.3 * 0.2 + 0.02;
  CHECK(!ground_truth_degradation(r, 0.02).at(2));
  CHECK_THROWS_AS(ground_truth_degradation({r[0]}), DomainError);
  std::vector<ExpertRecord> same{rec(1, 0.5, 1.6, {}), rec(2, 0.5, 1.7, {})};
  CHECK_THROWS_AS(ground_truth_degradation(same), DomainError);
}

TEST_CASE("pr curve matches brute-force counts") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto in = random_instance(12, seed);
    const auto curve = pr_curve(in.scores, in.truth);
    REQUIRE(curve.front().boundary == -std::numeric_limits<double>::infinity());
    for (std::size_t i = 1; i < curve.size(); ++i)
      CHECK(curve[i].boundary > curve[i - 1].boundary);
    for (const auto &p : curve) {
      const auto c = oracle::confusion(in.scores, in.truth, p.boundary);
      const double prec = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 1.0;
      CHECK(p.precision == prec);
      CHECK(p.recall == static_cast<double>(c.tp) / (c.tp + c.fn));
    }
    CHECK(pr_auc(curve) == doctest::Approx(oracle_auc(in)).epsilon(1e-12));
  }
}

TEST_CASE("degenerate and perfect classifiers") {
  const std::vector<double> flat(8, 3.0);
  const std::vector<bool> t{true, false, false, true, false, false, false, false};
  const auto c = pr_curve(flat, t);
  REQUIRE(c.size() == 2);
  CHECK(c[0].precision == 0.25);
  CHECK(c[0].recall == 1.0);
  CHECK(c[1].precision == 1.0);
  CHECK(c[1].recall == 0.0);
  CHECK(pr_auc(c) == doctest::Approx(0.625));

  const std::vector<double> s{0.1, 0.9, 0.2, 0.8, 0.3};
  const std::vector<bool> p{false, true, false, true, false};
  CHECK(pr_auc(pr_curve(s, p)) == doctest::Approx(1.0));
  const auto sw = accuracy_sweep(s, p);
  CHECK(sw.best_accuracy == 1.0);
  CHECK(sw.best_boundary == 0.3);

  CHECK_THROWS_AS(pr_curve(s, std::vector<bool>(5, false)), DomainError);
  CHECK_THROWS_AS(pr_curve(s, std::vector<bool>(4, true)), DomainError);
  CHECK_THROWS_AS(pr_curve({}, {}), DomainError);
  CHECK_THROWS_AS(pr_curve({std::nan("")}, {true}), DomainError);
}

TEST_CASE("accuracy sweep against a dense threshold scan") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto in = random_instance(15, seed + 100);
    const auto sw = accuracy_sweep(in.scores, in.truth);
    double best = 0;
    for (double th = -1.0; th <= 4.0; th += 0.125) {
      const auto c = oracle::confusion(in.scores, in.truth, th);
      best = std::max(best, static_cast<double>(c.tp + c.tn) / in.scores.size());
    }
    CHECK(sw.best_accuracy == doctest::Approx(best).epsilon(1e-15));
    for (const auto &pt : sw.curve)
      if (pt.boundary < sw.best_boundary)
        CHECK(pt.accuracy < sw.best_accuracy);
  }
}

TEST_CASE("monotone score transforms leave metrics unchanged") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto in = random_instance(20, seed + 200);
    const auto a = pr_curve(in.scores, in.truth);
    const auto sa = accuracy_sweep(in.scores, in.truth);
    for (auto &s : in.scores)
      s = std::exp(2.0 * s) + 4.0;
    const auto b = pr_curve(in.scores, in.truth);
    const auto sb = accuracy_sweep(in.scores, in.truth);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].precision == b[i].precision);
      CHECK(a[i].recall == b[i].recall);
    }
    CHECK(pr_auc(a) == pr_auc(b));
    CHECK(sa.best_accuracy == sb.best_accuracy);
  }
}

TEST_CASE("expert csv round trip and parsing rules") {
  TempDir tmp;
  std::vector<ExpertRecord> r{rec(1, 0.1, 1.55, 1.56, 1.551, 3.5), rec(2, 0.2, 1.6, {}, 1.61, 120.25)};
  save_expert_records(r, tmp / "e.csv");
  const auto back = load_expert_records(tmp / "e.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].post_eg == 1.56);
  CHECK(!back[1].post_eg);
  CHECK(back[1].i_c == 120.25);
  CHECK(back[0].auto_eg == 1.551);
  {
    std::ofstream f(tmp / "z.csv");
    f << "region_id,x,expert_eg,post_eg,auto_eg,i_c\n1,0.1,1.5,0.0,1.5,0\n";
  }
  CHECK(!load_expert_records(tmp / "z.csv")[0].post_eg);
  {
    std::ofstream f(tmp / "d.csv");
    f << "region_id,x,expert_eg,post_eg,auto_eg,i_c\n1,0.1,1.5,,1.5,0\n1,0.2,1.5,,1.5,0\n";
  }
  CHECK_THROWS_AS(load_expert_records(tmp / "d.csv"), FormatError);
}

TEST_CASE("full report") {
  std::vector<ExpertRecord> r;
  for (int i = 0; i < 20; ++i) {
    const double x = i / 19.0;
    const bool bad = i % 4 == 0;
    r.push_back(rec(i + 1, x, 1.5 + 0.2 * x, bad ? std::optional<double>{} : 1.5 + 0.2 * x,
                    1.5 + 0.2 * x + (i % 7 == 0 ? 0.05 : 0.005), bad ? 50.0 + i : 1.0 + 0.1 * i));
  }
  const auto rep = run_benchmark(r);
  CHECK(rep.n_records == 20);
  CHECK(rep.n_degraded == 5);
  CHECK(rep.accuracy_at_tol == doctest::Approx(17.0 / 20));
  CHECK(rep.pr_auc == doctest::Approx(1.0));
  CHECK(rep.sweep.best_accuracy == 1.0);
  REQUIRE(rep.accuracy_curve.size() == 21);
  CHECK(rep.accuracy_curve.back().first == doctest::Approx(0.1));
  TempDir tmp;
  save_report(rep, r, tmp / "out");
  for (const char *f : {"summary.csv", "accuracy_curve.csv", "pr_curve.csv", "accuracy_sweep.csv",
                        "accuracy_curve.svg", "pr_curve.svg", "accuracy_sweep.svg", "parity.svg"})
    CHECK(std::filesystem::exists(tmp / "out" / f));
}
