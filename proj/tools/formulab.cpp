// formulab: problem-formulation experiments for the 1-DoF pitch rig.
//
// Subcommands: run one experiment, run the whole matrix, rebuild the
// comparison table from persisted runs, emit plot-ready curve CSVs.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "formulab/config.hpp"
#include "formulab/csv.hpp"
#include "formulab/errors.hpp"
#include "formulab/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

namespace fs = std::filesystem;
using namespace formulab;

fs::path default_out_dir() {
  if (const char* env = std::getenv("FORMULAB_OUT")) return fs::path(env);
  return fs::path("runs");
}

void ensure_writable(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".formulab_probe";
  std::ofstream out(probe);
  if (!out) throw IoError("output directory not writable: " + dir.string());
  out.close();
  fs::remove(probe, ec);
}

struct Overrides {
  std::vector<uint64_t> seeds;
  std::optional<long> steps;

  void apply(ExperimentSpec& spec) const {
    if (!seeds.empty()) spec.seeds = seeds;
    if (steps) spec.total_steps = *steps;
  }
};

bool all_failed(const RunSummary& summary) {
  for (const auto& o : summary.seeds) {
    if (!o.failed) return false;
  }
  return true;
}

int cmd_run(const fs::path& config_path, const std::string& name,
            const fs::path& out_dir, int parallelism, const Overrides& ov) {
  const MatrixConfig cfg = load_matrix_config(config_path);
  const ExperimentSpec* found = nullptr;
  for (const auto& spec : cfg.experiments) {
    if (spec.name == name) found = &spec;
  }
  if (!found) {
    std::cerr << "error: no experiment named '" << name << "' in "
              << config_path << "\n";
    return kExitUsage;
  }
  ensure_writable(out_dir);
  ExperimentSpec spec = *found;
  ov.apply(spec);
  // an explicit run request always retrains; only `matrix` resumes
  const RunSummary summary = run_experiment(spec, out_dir, parallelism, false);
  std::cout << summary_to_csv(summary);
  return all_failed(summary) ? kExitRunFailure : kExitOk;
}

int cmd_matrix(const fs::path& config_path, const fs::path& out_dir,
               int parallelism, const Overrides& ov) {
  const MatrixConfig cfg = load_matrix_config(config_path);
  if (cfg.experiments.empty()) {
    std::cerr << "error: config defines no experiments\n";
    return kExitUsage;
  }
  ensure_writable(out_dir);
  std::vector<ExperimentSpec> specs = cfg.experiments;
  for (auto& spec : specs) ov.apply(spec);
  const auto summaries = run_matrix(specs, out_dir, parallelism, true);

  std::map<std::string, std::string> references;
  for (const auto& spec : specs) references[spec.name] = spec.reference;
  std::cout << comparison_pretty(build_table(summaries, references));

  for (const auto& s : summaries) {
    if (!all_failed(s)) return kExitOk;
  }
  return kExitRunFailure;
}

std::vector<fs::path> list_experiment_dirs(const fs::path& runs_dir) {
  if (!fs::is_directory(runs_dir)) {
    throw IoError("runs directory not found: " + runs_dir.string());
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(runs_dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "spec.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) {
    throw IoError("no experiment runs under " + runs_dir.string());
  }
  return dirs;
}

int cmd_compare(const fs::path& runs_dir) {
  std::vector<RunSummary> summaries;
  std::map<std::string, std::string> references;
  for (const auto& dir : list_experiment_dirs(runs_dir)) {
    const ExperimentSpec spec = spec_from_json_file(dir / "spec.json");
    references[spec.name] = spec.reference;
    summaries.push_back(load_experiment(dir));
  }
  // references that were never run cannot anchor a comparison
  for (auto& [name, ref] : references) {
    if (!ref.empty() && !references.count(ref)) ref.clear();
  }
  const auto entries = build_table(summaries, references);
  write_file_atomic(runs_dir / "comparison.csv", comparison_csv(entries));
  std::cout << comparison_pretty(entries);
  return kExitOk;
}

int cmd_emit_curves(const fs::path& runs_dir, const std::string& experiment,
                    std::optional<uint64_t> seed) {
  std::vector<std::string> warnings;
  const std::string training = training_curves_csv(runs_dir, &warnings);
  write_file_atomic(runs_dir / "curves_training.csv", training);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

  std::string exp = experiment;
  uint64_t chosen_seed = seed.value_or(0);
  if (exp.empty()) {
    const auto best = best_unit(runs_dir);
    exp = best.first;
    if (!seed) chosen_seed = best.second;
  } else if (!seed) {
    const RunSummary s = load_experiment(runs_dir / exp);
    bool found = false;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : s.seeds) {
      if (!o.failed && o.final_deviation_deg < best) {
        best = o.final_deviation_deg;
        chosen_seed = o.seed;
        found = true;
      }
    }
    if (!found) throw IoError("no completed seeds for " + exp);
  }
  write_file_atomic(runs_dir / "curves_episode.csv",
                    episode_curve_csv(runs_dir / exp, chosen_seed));
  std::cout << "curves_training.csv and curves_episode.csv (episode: " << exp
            << "/" << chosen_seed << ") written to " << runs_dir.string()
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Problem-formulation experiment lab for the 1-DoF pitch rig"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir_flag;
  std::string runs_dir_flag;
  std::string experiment_name;
  int parallelism = 1;
  std::vector<uint64_t> seed_override;
  long steps_override = -1;
  std::optional<uint64_t> curve_seed;
  std::string curve_experiment;

  auto* run = app.add_subcommand("run", "train one experiment over its seeds");
  run->add_option("--config", config_path, "matrix config file")->required();
  run->add_option("--name", experiment_name, "experiment name")->required();
  run->add_option("--out", out_dir_flag,
                  "output directory (default $FORMULAB_OUT or ./runs)");
  run->add_option("--parallel", parallelism, "worker count");
  run->add_option("--seeds", seed_override, "seed list override")
      ->delimiter(',');
  run->add_option("--steps", steps_override, "total training steps override");

  auto* matrix =
      app.add_subcommand("matrix", "run every experiment in the config");
  matrix->add_option("--config", config_path, "matrix config file")->required();
  matrix->add_option("--out", out_dir_flag, "output directory");
  matrix->add_option("--parallel", parallelism, "worker count");
  matrix->add_option("--seeds", seed_override, "seed list override")
      ->delimiter(',');
  matrix->add_option("--steps", steps_override,
                     "total training steps override");

  auto* comp = app.add_subcommand(
      "compare", "rebuild comparison.csv from persisted runs");
  comp->add_option("--runs", runs_dir_flag, "runs directory");

  auto* curves =
      app.add_subcommand("emit-curves", "write plot-ready curve CSVs");
  curves->add_option("--runs", runs_dir_flag, "runs directory");
  curves->add_option("--experiment", curve_experiment,
                     "episode curve experiment");
  curves->add_option("--seed", curve_seed, "episode curve seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const fs::path out_dir =
      out_dir_flag.empty() ? default_out_dir() : fs::path(out_dir_flag);
  const fs::path runs_dir =
      runs_dir_flag.empty() ? default_out_dir() : fs::path(runs_dir_flag);
  Overrides ov;
  ov.seeds = seed_override;
  if (steps_override > 0) ov.steps = steps_override;

  try {
    if (run->parsed()) {
      return cmd_run(config_path, experiment_name, out_dir, parallelism, ov);
    }
    if (matrix->parsed()) {
      return cmd_matrix(config_path, out_dir, parallelism, ov);
    }
    if (comp->parsed()) {
      return cmd_compare(runs_dir);
    }
    if (curves->parsed()) {
      return cmd_emit_curves(runs_dir, curve_experiment, curve_seed);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitUsage;
}
