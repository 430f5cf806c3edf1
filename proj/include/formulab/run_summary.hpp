#ifndef FORMULAB_RUN_SUMMARY_HPP_
#define FORMULAB_RUN_SUMMARY_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace formulab {

// Per-seed outcome of one training run, as recoverable from its log.csv.
struct SeedOutcome {
  uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  std::optional<long> steps_to_threshold;
  double final_deviation_deg = 0.0;
  double mean_abs_voltage = 0.0;
};

// Aggregated metric distributions of one experiment. Sigma is the sample
// standard deviation; a single successful seed reports sigma 0 by
// convention.
struct RunSummary {
  std::string experiment;
  std::vector<SeedOutcome> seeds;

  double success_fraction = 0.0;            // over non-failed seeds
  std::optional<double> steps_mu;           // over successful seeds
  std::optional<double> steps_sigma;
  std::optional<double> deviation_mu;       // over non-failed seeds
  std::optional<double> deviation_sigma;
  std::optional<double> deviation_min;
  std::optional<double> deviation_max;
  std::optional<double> voltage_mu;
  std::optional<double> voltage_sigma;
};

// Recomputes the aggregate fields from the per-seed outcomes.
RunSummary aggregate_outcomes(const std::string& experiment,
                              std::vector<SeedOutcome> outcomes);

}  // namespace formulab

#endif  // FORMULAB_RUN_SUMMARY_HPP_
