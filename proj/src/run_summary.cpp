#include "formulab/run_summary.hpp"

#include <algorithm>
#include <cmath>

namespace formulab {

namespace {

struct MeanStd {
  double mu;
  double sigma;
};

// Sample standard deviation (the outcomes are modeled as draws from a
// normal); a single sample reports sigma 0 by convention, matching the
// published "940000 +- 0 (10%)" row.
MeanStd mean_std(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  double mu = 0.0;
  for (double x : xs) mu += x;
  mu /= n;
  if (xs.size() < 2) return {mu, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mu) * (x - mu);
  var /= n - 1.0;
  return {mu, std::sqrt(var)};
}

}  // namespace

RunSummary aggregate_outcomes(const std::string& experiment,
                              std::vector<SeedOutcome> outcomes) {
  RunSummary s;
  s.experiment = experiment;
  s.seeds = std::move(outcomes);

  std::vector<double> steps, deviations, voltages;
  long ok = 0;
  for (const auto& o : s.seeds) {
    if (o.failed) continue;
    ++ok;
    if (o.steps_to_threshold) {
      steps.push_back(static_cast<double>(*o.steps_to_threshold));
    }
    deviations.push_back(o.final_deviation_deg);
    voltages.push_back(o.mean_abs_voltage);
  }

  if (ok > 0) {
    s.success_fraction =
        static_cast<double>(steps.size()) / static_cast<double>(ok);
  }
  if (!steps.empty()) {
    const MeanStd ms = mean_std(steps);
    s.steps_mu = ms.mu;
    s.steps_sigma = ms.sigma;
  }
  if (!deviations.empty()) {
    const MeanStd ms = mean_std(deviations);
    s.deviation_mu = ms.mu;
    s.deviation_sigma = ms.sigma;
    s.deviation_min = *std::min_element(deviations.begin(), deviations.end());
    s.deviation_max = *std::max_element(deviations.begin(), deviations.end());
    const MeanStd vs = mean_std(voltages);
    s.voltage_mu = vs.mu;
    s.voltage_sigma = vs.sigma;
  }
  return s;
}

}  // namespace formulab
