#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

namespace autochar {

struct ExpertRecord {
  int region_id = 0;
  double x = 0.0;
  double expert_eg = 0.0;          // pre-degradation, eV
  std::optional<double> post_eg;   // absent: no band gap after degradation
  double auto_eg = 0.0;            // eV
  double i_c = 0.0;                // px * hr
};

// CSV: region_id,x,expert_eg,post_eg,auto_eg,i_c (empty post_eg = absent;
// 0.0 is read as absent as well).
std::vector<ExpertRecord> load_expert_records(const std::filesystem::path &file);
void save_expert_records(const std::vector<ExpertRecord> &records,
                         const std::filesystem::path &file);

// Comparisons carry 1e-9 slack so decimal tolerances like 0.02 behave.
inline constexpr double kToleranceSlack = 1e-9;

// Fraction of records with |auto_eg - expert_eg| <= tol.
double bandgap_accuracy(const std::vector<ExpertRecord> &records, double tol);

// Linear least-squares fit of expert_eg against x; a record is degraded when
// post_eg is absent or |post_eg - fit(x)| > deviation.
std::map<int, bool> ground_truth_degradation(const std::vector<ExpertRecord> &records,
                                             double deviation = 0.02);

struct PrPoint {
  double boundary = 0.0; // predicted positive: score > boundary
  double precision = 0.0;
  double recall = 0.0;
};

// Boundaries: -inf followed by the ascending unique scores. Precision with no
// predicted positives is 1.
std::vector<PrPoint> pr_curve(const std::vector<double> &scores,
                              const std::vector<bool> &truth);

// Trapezoidal area under precision over recall, clamped to [0, 1].
double pr_auc(const std::vector<PrPoint> &curve);

struct AccuracyPoint {
  double boundary = 0.0;
  double accuracy = 0.0;
};

struct SweepResult {
  std::vector<AccuracyPoint> curve;
  double best_boundary = 0.0;
  double best_accuracy = 0.0;
};

// Same boundary set as pr_curve; ties in accuracy go to the lowest boundary.
SweepResult accuracy_sweep(const std::vector<double> &scores,
                           const std::vector<bool> &truth);

struct MetricsReport {
  std::vector<std::pair<double, double>> accuracy_curve; // tolerance, fraction
  double accuracy_at_tol = 0.0;                           // at 0.02 eV
  std::vector<PrPoint> pr;
  double pr_auc = 0.0;
  SweepResult sweep;
  std::size_t n_records = 0;
  std::size_t n_degraded = 0;
};

MetricsReport run_benchmark(const std::vector<ExpertRecord> &records);

// summary.csv, accuracy_curve.csv, pr_curve.csv, accuracy_sweep.csv and
// matching SVG plots plus parity.svg.
void save_report(const MetricsReport &report,
                 const std::vector<ExpertRecord> &records,
                 const std::filesystem::path &dir);

} // namespace autochar
