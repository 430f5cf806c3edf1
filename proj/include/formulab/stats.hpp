#ifndef FORMULAB_STATS_HPP_
#define FORMULAB_STATS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "formulab/run_summary.hpp"

namespace formulab {

enum class Orientation { kLowerIsBetter, kHigherIsBetter };

// Normal approximation of one experiment's metric over seeds.
struct MetricDist {
  double mu = 0.0;
  double sigma = 0.0;  // >= 0
  int n = 1;
  std::string metric;
  Orientation orientation = Orientation::kLowerIsBetter;
};

enum class Verdict { kBetter, kWorse, kIndistinguishable };

struct Comparison {
  double z = 0.0;
  Verdict verdict = Verdict::kIndistinguishable;
  double probability_less = 0.5;  // P(x1 < x2)
  bool degenerate = false;        // both sigmas zero with distinct means
};

// Standard normal CDF via the Abramowitz & Stegun 26.2.17 rational
// approximation (|error| < 7.5e-8).
double standard_normal_cdf(double x);

// (mu1 - mu2) / sqrt(sigma1^2 + sigma2^2). Both sigmas zero: 0 when the means
// agree, +/-inf otherwise.
double z_score(const MetricDist& x1, const MetricDist& x2);

// Verdict thresholds at |z| = 1: for lower-is-better metrics x1 is better
// when z < -1, worse when z > 1, else indistinguishable (flipped for
// higher-is-better).
Comparison compare(const MetricDist& x1, const MetricDist& x2);

const char* verdict_name(Verdict v);
const char* verdict_arrow(Verdict v);

// One (experiment, metric) line of the comparison table.
struct ComparisonEntry {
  std::string experiment;
  std::string reference;          // empty for reference rows
  std::string metric;             // steps_to_threshold | deviation_deg | voltage_v
  std::optional<double> mu;       // absent when no seed succeeded (steps)
  std::optional<double> sigma;
  std::optional<double> success_pct;  // steps metric only
  std::optional<double> z;        // absent for reference rows and n/a cases
  std::optional<Verdict> verdict; // absent for reference rows
};

// Builds the pairwise table: every non-reference summary is compared against
// its assigned reference for each of the three metrics. Steps comparisons
// against a reference with no successes are rendered without z and judged
// better when the variant has successes.
std::vector<ComparisonEntry> build_table(
    const std::vector<RunSummary>& summaries,
    const std::map<std::string, std::string>& references);

// comparison.csv with columns
// experiment,reference,metric,mu,sigma,success_pct,z,verdict.
std::string comparison_csv(const std::vector<ComparisonEntry>& entries);

// Fixed-width text rendering in the style of the published table.
std::string comparison_pretty(const std::vector<ComparisonEntry>& entries);

}  // namespace formulab

#endif  // FORMULAB_STATS_HPP_
