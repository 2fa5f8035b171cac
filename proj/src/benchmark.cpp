#include "autochar/benchmark.hpp"

#include "autochar/csv.hpp"
#include "autochar/error.hpp"
#include "autochar/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace autochar {

std::vector<ExpertRecord> load_expert_records(const std::filesystem::path &file) {
  const CsvTable t = read_csv(file);
  const std::string ctx = file.string();
  const auto ci = t.column("region_id"), cx = t.column("x"),
             ce = t.column("expert_eg"), cp = t.column("post_eg"),
             ca = t.column("auto_eg"), cc = t.column("i_c");
  std::vector<ExpertRecord> out;
  std::set<int> seen;
  for (const auto &row : t.rows) {
    ExpertRecord r;
    r.region_id = static_cast<int>(parse_int(row[ci], ctx));
    if (!seen.insert(r.region_id).second)
      throw FormatError(ctx + ": duplicate region_id " + std::to_string(r.region_id));
    r.x = parse_double(row[cx], ctx);
    r.expert_eg = parse_double(row[ce], ctx);
    r.post_eg = parse_optional_double(row[cp], ctx);
    if (r.post_eg && *r.post_eg == 0.0)
      r.post_eg.reset();
    r.auto_eg = parse_double(row[ca], ctx);
    r.i_c = parse_double(row[cc], ctx);
    out.push_back(r);
  }
  return out;
}

void save_expert_records(const std::vector<ExpertRecord> &records,
                         const std::filesystem::path &file) {
  CsvWriter csv({"region_id", "x", "expert_eg", "post_eg", "auto_eg", "i_c"});
  for (const auto &r : records)
    csv.row({std::to_string(r.region_id), format_double(r.x),
             format_double(r.expert_eg),
             r.post_eg ? format_double(*r.post_eg) : std::string(),
             format_double(r.auto_eg), format_double(r.i_c)});
  csv.save(file);
}

double bandgap_accuracy(const std::vector<ExpertRecord> &records, double tol) {
  if (records.empty())
    throw DomainError("bandgap_accuracy: no records");
  if (!(tol >= 0.0))
    throw DomainError("bandgap_accuracy: tolerance must be >= 0");
  std::size_t hit = 0;
  for (const auto &r : records)
    if (std::abs(r.auto_eg - r.expert_eg) <= tol + kToleranceSlack)
      ++hit;
  return static_cast<double>(hit) / static_cast<double>(records.size());
}

std::map<int, bool> ground_truth_degradation(const std::vector<ExpertRecord> &records,
                                             double deviation) {
  if (records.size() < 2)
    throw DomainError("ground truth needs at least 2 pre-degradation records");
  double mx = 0.0, my = 0.0;
  for (const auto &r : records) {
    mx += r.x;
    my += r.expert_eg;
  }
  mx /= static_cast<double>(records.size());
  my /= static_cast<double>(records.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto &r : records) {
    sxx += (r.x - mx) * (r.x - mx);
    sxy += (r.x - mx) * (r.expert_eg - my);
  }
  if (!(sxx > 0.0))
    throw DomainError("ground truth fit undefined: all compositions equal");
  const double slope = sxy / sxx;
  const double icpt = my - slope * mx;
  std::map<int, bool> out;
  for (const auto &r : records)
    out[r.region_id] = !r.post_eg || std::abs(*r.post_eg - (slope * r.x + icpt)) >
                                         deviation + kToleranceSlack;
  return out;
}

namespace {

void check_scores(const std::vector<double> &scores, const std::vector<bool> &truth) {
  if (scores.empty())
    throw DomainError("no scores");
  if (scores.size() != truth.size())
    throw DomainError("scores and truth differ in length");
  for (double s : scores)
    if (!std::isfinite(s))
      throw DomainError("non-finite score");
}

std::vector<double> boundaries(const std::vector<double> &scores) {
  std::vector<double> b(scores);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  b.insert(b.begin(), -std::numeric_limits<double>::infinity());
  return b;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(const std::vector<double> &scores, const std::vector<bool> &truth,
                    double boundary) {
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > boundary;
    if (pred && truth[i]) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth[i]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

} // namespace

std::vector<PrPoint> pr_curve(const std::vector<double> &scores,
                              const std::vector<bool> &truth) {
  check_scores(scores, truth);
  if (std::none_of(truth.begin(), truth.end(), [](bool t) { return t; }))
    throw DomainError("pr_curve: truth has no positives");
  std::vector<PrPoint> out;
  for (double b : boundaries(scores)) {
    const Confusion c = confusion(scores, truth, b);
    const double precision =
        c.tp + c.fp == 0 ? 1.0 : static_cast<double>(c.tp) / (c.tp + c.fp);
    out.push_back({b, precision, static_cast<double>(c.tp) / (c.tp + c.fn)});
  }
  return out;
}

double pr_auc(const std::vector<PrPoint> &curve) {
  if (curve.size() < 2)
    throw DomainError("pr_auc needs at least 2 curve points");
  std::vector<PrPoint> pts(curve);
  // Recall order; at equal recall the higher boundary comes first.
  std::stable_sort(pts.begin(), pts.end(), [](const PrPoint &a, const PrPoint &b) {
    if (a.recall != b.recall)
      return a.recall < b.recall;
    return a.boundary > b.boundary;
  });
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += 0.5 * (pts[i].precision + pts[i - 1].precision) *
            (pts[i].recall - pts[i - 1].recall);
  return std::clamp(area, 0.0, 1.0);
}

SweepResult accuracy_sweep(const std::vector<double> &scores,
                           const std::vector<bool> &truth) {
  check_scores(scores, truth);
  SweepResult res;
  res.best_accuracy = -1.0;
  for (double b : boundaries(scores)) {
    const Confusion c = confusion(scores, truth, b);
    const double acc = static_cast<double>(c.tp + c.tn) / scores.size();
    res.curve.push_back({b, acc});
    if (acc > res.best_accuracy) {
      res.best_accuracy = acc;
      res.best_boundary = b;
    }
  }
  return res;
}

MetricsReport run_benchmark(const std::vector<ExpertRecord> &records) {
  MetricsReport rep;
  rep.n_records = records.size();
  for (int k = 0; k <= 20; ++k) {
    const double tol = 0.005 * k;
    rep.accuracy_curve.emplace_back(tol, bandgap_accuracy(records, tol));
  }
  rep.accuracy_at_tol = bandgap_accuracy(records, 0.02);
  const auto gt = ground_truth_degradation(records);
  std::vector<double> scores;
  std::vector<bool> truth;
  for (const auto &r : records) {
    scores.push_back(r.i_c);
    truth.push_back(gt.at(r.region_id));
    if (truth.back())
      ++rep.n_degraded;
  }
  rep.pr = pr_curve(scores, truth);
  rep.pr_auc = pr_auc(rep.pr);
  rep.sweep = accuracy_sweep(scores, truth);
  return rep;
}

void save_report(const MetricsReport &rep, const std::vector<ExpertRecord> &records,
                 const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  CsvWriter summary({"metric", "value"});
  summary.row({"n_records", std::to_string(rep.n_records)})
      .row({"n_degraded", std::to_string(rep.n_degraded)})
      .row({"bandgap_accuracy_0.02ev", format_double(rep.accuracy_at_tol)})
      .row({"pr_auc", format_double(rep.pr_auc)})
      .row({"best_boundary_px_hr", format_double(rep.sweep.best_boundary)})
      .row({"best_accuracy", format_double(rep.sweep.best_accuracy)});
  summary.save(dir / "summary.csv");

  CsvWriter acc({"tolerance_ev", "accuracy"});
  PlotSeries acc_s{"", {}, {}, PlotSeries::Style::Line, "#1f77b4"};
  for (const auto &[t, a] : rep.accuracy_curve) {
    acc.row({format_double(t), format_double(a)});
    acc_s.x.push_back(t);
    acc_s.y.push_back(a);
  }
  acc.save(dir / "accuracy_curve.csv");

  CsvWriter pr({"boundary", "precision", "recall"});
  PlotSeries pr_s{"", {}, {}, PlotSeries::Style::Line, "#d62728"};
  for (const auto &p : rep.pr) {
    pr.row({format_double(p.boundary), format_double(p.precision),
            format_double(p.recall)});
    pr_s.x.push_back(p.recall);
    pr_s.y.push_back(p.precision);
  }
  pr.save(dir / "pr_curve.csv");

  CsvWriter sw({"boundary", "accuracy"});
  PlotSeries sw_s{"", {}, {}, PlotSeries::Style::Step, "#2ca02c"};
  for (const auto &p : rep.sweep.curve) {
    sw.row({format_double(p.boundary), format_double(p.accuracy)});
    if (std::isfinite(p.boundary)) {
      sw_s.x.push_back(p.boundary);
      sw_s.y.push_back(p.accuracy);
    }
  }
  sw.save(dir / "accuracy_sweep.csv");

  PlotSpec a;
  a.title = "Band-gap accuracy vs tolerance";
  a.x_label = "tolerance (eV)";
  a.y_label = "fraction within tolerance";
  a.series = {acc_s};
  a.y_range = std::pair{0.0, 1.02};
  write_text_file(dir / "accuracy_curve.svg", render_svg(a));

  PlotSpec p;
  p.title = "Precision-recall (AUC " + format_double(std::round(rep.pr_auc * 1000) / 1000) + ")";
  p.x_label = "recall";
  p.y_label = "precision";
  p.series = {pr_s};
  p.x_range = std::pair{0.0, 1.0};
  p.y_range = std::pair{0.0, 1.02};
  write_text_file(dir / "pr_curve.svg", render_svg(p));

  PlotSpec s;
  s.title = "Classification accuracy vs decision boundary";
  s.x_label = "decision boundary I_c (px hr)";
  s.y_label = "accuracy";
  s.series = {sw_s};
  s.guides = {{true, rep.sweep.best_boundary, "#888888"}};
  write_text_file(dir / "accuracy_sweep.svg", render_svg(s));

  PlotSpec par;
  par.title = "Automatic vs expert band gap";
  par.x_label = "expert E_g (eV)";
  par.y_label = "automatic E_g (eV)";
  PlotSeries pts{"", {}, {}, PlotSeries::Style::Points, "#1f77b4"};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto &r : records) {
    pts.x.push_back(r.expert_eg);
    pts.y.push_back(r.auto_eg);
    lo = std::min({lo, r.expert_eg, r.auto_eg});
    hi = std::max({hi, r.expert_eg, r.auto_eg});
  }
  if (records.empty()) {
    lo = 1.2;
    hi = 3.3;
  }
  PlotSeries diag{"y = x", {lo, hi}, {lo, hi}, PlotSeries::Style::Line, "#888888"};
  par.series = {diag, pts};
  write_text_file(dir / "parity.svg", render_svg(par));
}

} // namespace autochar
