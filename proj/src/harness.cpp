#include "formulab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "formulab/csv.hpp"
#include "formulab/errors.hpp"

namespace formulab {

namespace {
constexpr uint64_t kEvalEnvSeed = 0x9a1ce5ed;
std::mutex g_print_mutex;
}  // namespace

void ExperimentSpec::validate() const {
  if (name.empty()) throw ConfigError("experiment name must be non-empty");
  if (seeds.empty()) throw ConfigError("experiment '" + name + "' has no seeds");
  if (eval_interval < 1) {
    throw ConfigError("experiment '" + name + "': eval_interval must be >= 1");
  }
  if (!(threshold_deg > 0.0)) {
    throw ConfigError("experiment '" + name + "': threshold_deg must be > 0");
  }
  if (total_steps < 1) {
    throw ConfigError("experiment '" + name + "': total_steps must be >= 1");
  }
  formulation.validate(plant);
  ppo.validate();
}

EvalOutcome evaluate(const PolicyParams& params,
                     const FormulationConfig& training_formulation,
                     const PlantParams& plant) {
  FormulationConfig eval_cfg = FormulationConfig::baseline();
  // The task is the baseline profile; only the policy's interface follows
  // the training formulation.
  eval_cfg.normalize_obs = training_formulation.normalize_obs;
  eval_cfg.normalize_action = training_formulation.normalize_action;
  eval_cfg.velocity_norm_scale = training_formulation.velocity_norm_scale;

  PitchEnv env(eval_cfg, plant);
  Observation obs = env.reset(kEvalEnvSeed);

  EvalOutcome out;
  double sum_deviation = 0.0;
  double sum_voltage = 0.0;
  long steps = 0;
  while (true) {
    const PolicyOutput po = policy_forward(params, obs);
    const StepResult sr = env.step(po.mean);
    sum_deviation += std::abs(sr.info.pitch_deg - sr.info.target_deg);
    sum_voltage += std::abs(sr.info.voltage);
    ++steps;
    obs = sr.observation;
    if (sr.episode_done) {
      out.truncated = sr.truncated;
      break;
    }
  }
  out.mean_deviation_deg = sum_deviation / static_cast<double>(steps);
  out.mean_abs_voltage = sum_voltage / static_cast<double>(steps);
  return out;
}

std::optional<long> steps_to_threshold(const std::vector<TrainLogRow>& log,
                                       double threshold_deg) {
  for (const auto& row : log) {
    if (row.eval_mean_deviation_deg <= threshold_deg) return row.global_step;
  }
  return std::nullopt;
}

std::string log_to_csv(const std::vector<TrainLogRow>& log) {
  std::ostringstream os;
  write_csv_row(os, {"global_step", "episode_return",
                     "eval_mean_deviation_deg", "eval_mean_abs_voltage",
                     "clip_fraction", "approx_kl"});
  for (const auto& r : log) {
    write_csv_row(os, {std::to_string(r.global_step),
                       format_double(r.episode_return),
                       format_double(r.eval_mean_deviation_deg),
                       format_double(r.eval_mean_abs_voltage),
                       format_double(r.clip_fraction),
                       format_double(r.approx_kl)});
  }
  return os.str();
}

std::vector<TrainLogRow> log_from_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() != 6 || rows[0][0] != "global_step") {
    throw IoError("unrecognized log format: " + path.string());
  }
  std::vector<TrainLogRow> log;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 6) throw IoError("ragged log row in " + path.string());
    TrainLogRow row;
    row.global_step = std::stol(r[0]);
    row.episode_return = parse_double(r[1]);
    row.eval_mean_deviation_deg = parse_double(r[2]);
    row.eval_mean_abs_voltage = parse_double(r[3]);
    row.clip_fraction = parse_double(r[4]);
    row.approx_kl = parse_double(r[5]);
    log.push_back(row);
  }
  return log;
}

std::string summary_to_csv(const RunSummary& s) {
  std::ostringstream os;
  const auto opt_long = [](const std::optional<long>& v) {
    return v ? std::to_string(*v) : std::string{};
  };
  const auto opt_double = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
  };
  write_csv_row(os, {"experiment", "seed", "steps_to_threshold",
                     "final_deviation_deg", "mean_abs_voltage", "status"});
  for (const auto& o : s.seeds) {
    write_csv_row(os, {s.experiment, std::to_string(o.seed),
                       opt_long(o.steps_to_threshold),
                       o.failed ? "" : format_double(o.final_deviation_deg),
                       o.failed ? "" : format_double(o.mean_abs_voltage),
                       o.failed ? "failed: " + o.failure : "ok"});
  }
  const auto agg = [&](const std::string& label,
                       const std::optional<double>& steps,
                       const std::optional<double>& dev,
                       const std::optional<double>& volt) {
    write_csv_row(os, {s.experiment, label, opt_double(steps), opt_double(dev),
                       opt_double(volt), ""});
  };
  agg("mean", s.steps_mu, s.deviation_mu, s.voltage_mu);
  agg("std", s.steps_sigma, s.deviation_sigma, s.voltage_sigma);
  agg("min", std::nullopt, s.deviation_min, std::nullopt);
  agg("max", std::nullopt, s.deviation_max, std::nullopt);
  write_csv_row(os, {s.experiment, "success_fraction",
                     format_double(s.success_fraction), "", "", ""});
  return os.str();
}

namespace {

SeedOutcome outcome_from_log(uint64_t seed, const std::vector<TrainLogRow>& log,
                             double threshold_deg) {
  SeedOutcome o;
  o.seed = seed;
  if (log.empty()) {
    o.failed = true;
    o.failure = "no evaluation rows (total_steps < eval_interval?)";
    return o;
  }
  o.steps_to_threshold = steps_to_threshold(log, threshold_deg);
  o.final_deviation_deg = log.back().eval_mean_deviation_deg;
  o.mean_abs_voltage = log.back().eval_mean_abs_voltage;
  return o;
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto rows = read_csv(path);  // tolerant enough for one-line files
  std::string text;
  for (const auto& r : rows) {
    for (const auto& f : r) text += f;
  }
  return text;
}

SeedOutcome run_seed_unit(const ExperimentSpec& spec, uint64_t seed,
                          const std::filesystem::path& seed_dir, bool resume) {
  const auto log_path = seed_dir / "log.csv";
  const auto policy_path = seed_dir / "policy.json";
  const auto failed_path = seed_dir / "failed.txt";

  if (resume && std::filesystem::exists(failed_path)) {
    SeedOutcome o;
    o.seed = seed;
    o.failed = true;
    o.failure = read_text_file(failed_path);
    return o;
  }
  if (resume && std::filesystem::exists(log_path) &&
      std::filesystem::exists(policy_path)) {
    return outcome_from_log(seed, log_from_csv(log_path), spec.threshold_deg);
  }

  std::filesystem::create_directories(seed_dir);

  PitchEnv prototype(spec.formulation, spec.plant);
  PpoConfig ppo = spec.ppo;
  ppo.total_steps = spec.total_steps;
  const EvalCallback eval_cb = [&](long step, const PolicyParams& params) {
    const EvalOutcome eo = evaluate(params, spec.formulation, spec.plant);
    if (eo.truncated) {
      std::lock_guard<std::mutex> lock(g_print_mutex);
      std::cout << "[" << spec.name << "/" << seed << "] evaluation at step "
                << step << " truncated; metrics cover the steps that occurred"
                << std::endl;
    }
    return std::make_pair(eo.mean_deviation_deg, eo.mean_abs_voltage);
  };

  const TrainResult result = train(prototype, ppo, seed, spec.eval_interval, eval_cb);

  if (result.aborted) {
    write_file_atomic(failed_path, result.abort_reason + "\n");
    SeedOutcome o;
    o.seed = seed;
    o.failed = true;
    o.failure = result.abort_reason;
    return o;
  }

  write_file_atomic(log_path, log_to_csv(result.log));
  write_file_atomic(policy_path, policy_to_json(result.params));
  return outcome_from_log(seed, result.log, spec.threshold_deg);
}

struct Unit {
  const ExperimentSpec* spec = nullptr;
  uint64_t seed = 0;
  std::filesystem::path dir;
  bool resume = true;
  SeedOutcome outcome;
};

void execute_units(std::vector<Unit>& units, int parallelism) {
  std::atomic<size_t> next{0};
  const auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= units.size()) return;
      Unit& u = units[i];
      try {
        u.outcome = run_seed_unit(*u.spec, u.seed, u.dir, u.resume);
      } catch (const std::exception& e) {
        u.outcome.seed = u.seed;
        u.outcome.failed = true;
        u.outcome.failure = e.what();
      }
      std::lock_guard<std::mutex> lock(g_print_mutex);
      std::cout << "[" << u.spec->name << "/" << u.seed << "] "
                << (u.outcome.failed
                        ? "failed: " + u.outcome.failure
                        : "final deviation " +
                              format_double(u.outcome.final_deviation_deg) +
                              " deg")
                << std::endl;
    }
  };
  if (parallelism <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> threads;
  const int n = std::min<int>(parallelism, static_cast<int>(units.size()));
  threads.reserve(n);
  for (int i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
}

void persist_experiment(const ExperimentSpec& spec,
                        const std::filesystem::path& exp_dir,
                        const RunSummary& summary) {
  std::filesystem::create_directories(exp_dir);
  write_file_atomic(exp_dir / "spec.json", spec_to_json_string(spec));
  write_file_atomic(exp_dir / "summary.csv", summary_to_csv(summary));
}

std::vector<RunSummary> run_units_grouped(
    const std::vector<ExperimentSpec>& specs,
    const std::filesystem::path& out_dir, int parallelism, bool resume) {
  std::vector<Unit> units;
  for (const auto& spec : specs) {
    for (uint64_t seed : spec.seeds) {
      units.push_back(Unit{&spec, seed,
                           out_dir / spec.name / std::to_string(seed), resume,
                           SeedOutcome{}});
    }
  }
  execute_units(units, parallelism);

  std::vector<RunSummary> summaries;
  size_t k = 0;
  for (const auto& spec : specs) {
    std::vector<SeedOutcome> outcomes;
    for (size_t i = 0; i < spec.seeds.size(); ++i) {
      outcomes.push_back(units[k++].outcome);
    }
    RunSummary summary = aggregate_outcomes(spec.name, std::move(outcomes));
    persist_experiment(spec, out_dir / spec.name, summary);
    summaries.push_back(std::move(summary));
  }
  return summaries;
}

}  // namespace

RunSummary run_experiment(const ExperimentSpec& spec,
                          const std::filesystem::path& out_dir,
                          int parallelism, bool resume) {
  spec.validate();
  return run_units_grouped({spec}, out_dir, parallelism, resume).front();
}

std::vector<RunSummary> run_matrix(const std::vector<ExperimentSpec>& specs,
                                   const std::filesystem::path& out_dir,
                                   int parallelism, bool resume) {
  std::filesystem::create_directories(out_dir);
  std::set<std::string> names;
  for (const auto& spec : specs) {
    spec.validate();
    if (!names.insert(spec.name).second) {
      throw ConfigError("duplicate experiment name '" + spec.name + "'");
    }
  }

  std::vector<RunSummary> summaries =
      run_units_grouped(specs, out_dir, parallelism, resume);

  std::map<std::string, std::string> references;
  for (const auto& spec : specs) references[spec.name] = spec.reference;
  const auto entries = build_table(summaries, references);
  write_file_atomic(out_dir / "comparison.csv", comparison_csv(entries));
  return summaries;
}

namespace {

std::vector<std::filesystem::path> experiment_dirs(
    const std::filesystem::path& runs_dir) {
  std::vector<std::filesystem::path> dirs;
  if (!std::filesystem::is_directory(runs_dir)) {
    throw IoError("runs directory not found: " + runs_dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(runs_dir)) {
    if (entry.is_directory() &&
        std::filesystem::exists(entry.path() / "spec.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) {
    throw IoError("no experiment runs under " + runs_dir.string());
  }
  return dirs;
}

}  // namespace

std::string training_curves_csv(const std::filesystem::path& runs_dir,
                                std::vector<std::string>* warnings) {
  struct Curve {
    std::string name;
    // eval step -> deviations across seeds
    std::map<long, std::vector<double>> points;
  };
  std::vector<Curve> curves;
  std::set<long> all_steps;

  for (const auto& dir : experiment_dirs(runs_dir)) {
    const ExperimentSpec spec = spec_from_json_file(dir / "spec.json");
    Curve curve;
    curve.name = spec.name;
    for (uint64_t seed : spec.seeds) {
      const auto log_path = dir / std::to_string(seed) / "log.csv";
      if (!std::filesystem::exists(log_path)) {
        if (warnings) {
          warnings->push_back("missing log for " + spec.name + "/" +
                              std::to_string(seed) +
                              "; band uses the available seeds");
        }
        continue;
      }
      for (const auto& row : log_from_csv(log_path)) {
        curve.points[row.global_step].push_back(row.eval_mean_deviation_deg);
        all_steps.insert(row.global_step);
      }
    }
    curves.push_back(std::move(curve));
  }

  std::ostringstream os;
  std::vector<std::string> header{"step"};
  for (const auto& c : curves) {
    header.push_back(c.name + "_mean_deviation_deg");
    header.push_back(c.name + "_std_deviation_deg");
  }
  write_csv_row(os, header);
  for (long step : all_steps) {
    std::vector<std::string> fields{std::to_string(step)};
    for (const auto& c : curves) {
      const auto it = c.points.find(step);
      if (it == c.points.end() || it->second.empty()) {
        fields.push_back("");
        fields.push_back("");
        continue;
      }
      const auto& xs = it->second;
      double mu = 0.0;
      for (double x : xs) mu += x;
      mu /= static_cast<double>(xs.size());
      double sigma = 0.0;
      if (xs.size() > 1) {
        double var = 0.0;
        for (double x : xs) var += (x - mu) * (x - mu);
        sigma = std::sqrt(var / static_cast<double>(xs.size() - 1));
      }
      fields.push_back(format_double(mu));
      fields.push_back(format_double(sigma));
    }
    write_csv_row(os, fields);
  }
  return os.str();
}

std::string episode_curve_csv(const std::filesystem::path& experiment_dir,
                              uint64_t seed) {
  const ExperimentSpec spec = spec_from_json_file(experiment_dir / "spec.json");
  const auto policy_path =
      experiment_dir / std::to_string(seed) / "policy.json";
  const PolicyParams params = policy_from_json(policy_path);

  FormulationConfig eval_cfg = FormulationConfig::baseline();
  eval_cfg.normalize_obs = spec.formulation.normalize_obs;
  eval_cfg.normalize_action = spec.formulation.normalize_action;
  eval_cfg.velocity_norm_scale = spec.formulation.velocity_norm_scale;

  PitchEnv env(eval_cfg, spec.plant);
  Observation obs = env.reset(kEvalEnvSeed);

  std::ostringstream os;
  write_csv_row(os, {"time_s", "target_deg", "pitch_deg", "voltage_v"});
  long step = 0;
  while (true) {
    const PolicyOutput po = policy_forward(params, obs);
    const StepResult sr = env.step(po.mean);
    ++step;
    write_csv_row(os, {format_double(static_cast<double>(step) * spec.plant.dt),
                       format_double(sr.info.target_deg),
                       format_double(sr.info.pitch_deg),
                       format_double(sr.info.voltage)});
    obs = sr.observation;
    if (sr.episode_done) break;
  }
  return os.str();
}

std::pair<std::string, uint64_t> best_unit(
    const std::filesystem::path& runs_dir) {
  std::string best_name;
  uint64_t best_seed = 0;
  double best_dev = std::numeric_limits<double>::infinity();
  for (const auto& dir : experiment_dirs(runs_dir)) {
    const RunSummary summary = load_experiment(dir);
    for (const auto& o : summary.seeds) {
      if (o.failed) continue;
      if (!std::filesystem::exists(dir / std::to_string(o.seed) /
                                   "policy.json")) {
        continue;
      }
      if (o.final_deviation_deg < best_dev) {
        best_dev = o.final_deviation_deg;
        best_name = dir.filename().string();
        best_seed = o.seed;
      }
    }
  }
  if (best_name.empty()) {
    throw IoError("no completed units with a persisted policy under " +
                  runs_dir.string());
  }
  return {best_name, best_seed};
}

RunSummary load_experiment(const std::filesystem::path& experiment_dir) {
  const ExperimentSpec spec =
      spec_from_json_file(experiment_dir / "spec.json");
  std::vector<SeedOutcome> outcomes;
  for (uint64_t seed : spec.seeds) {
    const auto seed_dir = experiment_dir / std::to_string(seed);
    SeedOutcome o;
    o.seed = seed;
    const auto failed_path = seed_dir / "failed.txt";
    const auto log_path = seed_dir / "log.csv";
    if (std::filesystem::exists(failed_path)) {
      o.failed = true;
      o.failure = read_text_file(failed_path);
    } else if (std::filesystem::exists(log_path)) {
      o = outcome_from_log(seed, log_from_csv(log_path), spec.threshold_deg);
    } else {
      o.failed = true;
      o.failure = "no artifacts for this seed";
    }
    outcomes.push_back(std::move(o));
  }
  return aggregate_outcomes(spec.name, std::move(outcomes));
}

}  // namespace formulab
