#ifndef FORMULAB_CONFIG_HPP_
#define FORMULAB_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "formulab/harness.hpp"

namespace formulab {

// Matrix-wide run settings (per-experiment entries may override them).
struct HarnessDefaults {
  std::vector<uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  long eval_interval = 10000;
  double threshold_deg = 4.0;
  long total_steps = 1000000;

  bool operator==(const HarnessDefaults&) const = default;
};

struct MatrixConfig {
  PlantParams plant;
  PpoConfig ppo;
  HarnessDefaults defaults;
  std::vector<ExperimentSpec> experiments;

  bool operator==(const MatrixConfig&) const = default;
};

// Parses the JSON matrix config; throws ConfigError carrying the parser's
// line/column diagnostics on malformed input, and validates every entry
// (unique names, known references, physical plant, episode grid).
MatrixConfig parse_matrix_config(const std::string& text);
MatrixConfig load_matrix_config(const std::filesystem::path& path);

// Canonical serialization; parse(serialize(parse(x))) == parse(x).
std::string serialize_matrix_config(const MatrixConfig& config);

// The eleven simulated experiments of the study: Baseline, the four
// single-addition variants, New setting, the four single-ablation variants,
// and New setting with the action penalty.
std::vector<ExperimentSpec> paper_matrix(const PlantParams& plant,
                                         const PpoConfig& ppo,
                                         const HarnessDefaults& defaults);

}  // namespace formulab

#endif  // FORMULAB_CONFIG_HPP_
