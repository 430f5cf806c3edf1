#ifndef FORMULAB_HARNESS_HPP_
#define FORMULAB_HARNESS_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "formulab/env.hpp"
#include "formulab/ppo.hpp"
#include "formulab/run_summary.hpp"
#include "formulab/stats.hpp"

namespace formulab {

// One row of the experiment matrix.
struct ExperimentSpec {
  std::string name;
  std::string reference;  // comparison reference; empty for reference rows
  FormulationConfig formulation;
  PlantParams plant;
  PpoConfig ppo;
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  long eval_interval = 10000;
  double threshold_deg = 4.0;
  long total_steps = 1000000;

  void validate() const;

  bool operator==(const ExperimentSpec&) const = default;
};

struct EvalOutcome {
  double mean_deviation_deg = 0.0;
  double mean_abs_voltage = 0.0;
  bool truncated = false;
};

// Runs one deterministic episode (action = policy mean) on the evaluation
// task: the baseline profile-tracking episode, with the training
// formulation's observation/action normalization so the policy interface
// matches. Metrics come from the raw info fields. A truncated evaluation
// averages over the steps that occurred.
EvalOutcome evaluate(const PolicyParams& params,
                     const FormulationConfig& training_formulation,
                     const PlantParams& plant);

// Trains every seed of one experiment, persisting per-seed artifacts under
// out_dir/<name>/<seed>/ (log.csv + policy.json, or failed.txt), the resolved
// spec as spec.json and the aggregate as summary.csv. With resume=true,
// seeds whose artifacts already exist are loaded instead of retrained.
RunSummary run_experiment(const ExperimentSpec& spec,
                          const std::filesystem::path& out_dir,
                          int parallelism = 1, bool resume = true);

// Runs all experiments, (experiment x seed) units spread over `parallelism`
// workers, then writes out_dir/comparison.csv via the stats module.
std::vector<RunSummary> run_matrix(const std::vector<ExperimentSpec>& specs,
                                   const std::filesystem::path& out_dir,
                                   int parallelism = 1, bool resume = true);

// Rebuilds summaries from artifacts persisted by earlier runs.
RunSummary load_experiment(const std::filesystem::path& experiment_dir);

// First evaluation step whose deviation is at or under the threshold.
std::optional<long> steps_to_threshold(const std::vector<TrainLogRow>& log,
                                       double threshold_deg);

// Plot-ready CSV: one row per evaluation step, one mean and one std column
// per experiment (band over the seeds that have that step). Experiments with
// missing seed logs produce a warning and a band over the available seeds.
std::string training_curves_csv(const std::filesystem::path& runs_dir,
                                std::vector<std::string>* warnings = nullptr);

// One deterministic evaluation episode of a persisted policy:
// time_s,target_deg,pitch_deg,voltage_v rows at the plant sample time.
std::string episode_curve_csv(const std::filesystem::path& experiment_dir,
                              uint64_t seed);

// The (experiment, seed) with the smallest final evaluation deviation.
std::pair<std::string, uint64_t> best_unit(
    const std::filesystem::path& runs_dir);

// On-disk helpers shared by the harness and the CLI.
std::string log_to_csv(const std::vector<TrainLogRow>& log);
std::vector<TrainLogRow> log_from_csv(const std::filesystem::path& path);
std::string summary_to_csv(const RunSummary& summary);
std::string policy_to_json(const PolicyParams& params);
PolicyParams policy_from_json(const std::filesystem::path& path);
std::string spec_to_json_string(const ExperimentSpec& spec);
ExperimentSpec spec_from_json_file(const std::filesystem::path& path);

}  // namespace formulab

#endif  // FORMULAB_HARNESS_HPP_
