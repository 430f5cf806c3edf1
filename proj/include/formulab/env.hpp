#ifndef FORMULAB_ENV_HPP_
#define FORMULAB_ENV_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "formulab/plant.hpp"
#include "formulab/rng.hpp"
#include "formulab/units.hpp"

namespace formulab {

enum class TargetMode { kFixedProfile, kRandomRedraw };
enum class InitialTiltMode { kFixedZero, kUniformRandom };

// One problem formulation: everything that defines the learning task as
// opposed to the algorithm. The two presets mirror the Baseline / New-setting
// parameter columns.
struct FormulationConfig {
  double stop_time_s = 80.0;
  TargetMode target_mode = TargetMode::kFixedProfile;
  double target_redraw_prob = 0.01;               // per step
  std::array<double, 2> target_range_deg = {-40.0, 40.0};
  InitialTiltMode initial_tilt_mode = InitialTiltMode::kFixedZero;
  std::array<double, 2> initial_tilt_range_deg = {-40.0, 40.0};
  bool normalize_obs = false;
  bool normalize_action = false;
  double action_penalty_coeff = 0.0;
  double penalty_window_s = 1.0;
  double velocity_norm_scale = 0.2441;
  double truncation_bound = kPi / 2.0;            // rad
  std::optional<long> truncation_penalty_clamp;   // steps

  static FormulationConfig baseline();
  static FormulationConfig new_setting();

  // Episode length in samples; requires stop_time_s / dt to be a positive
  // integer. Throws ConfigError otherwise.
  long episode_steps(double dt) const;

  void validate(const PlantParams& plant) const;

  bool operator==(const FormulationConfig&) const = default;
};

// Agent-facing state tuple. Components are radians (pitch, target) and
// per-sample pitch difference (angular_velocity) unless normalized.
struct Observation {
  double pitch = 0.0;
  double angular_velocity = 0.0;  // pitch_t - pitch_{t-1}, NOT divided by dt
  double target = 0.0;

  bool operator==(const Observation&) const = default;
};

// Raw physical quantities of a step, independent of normalization flags.
struct StepInfo {
  double pitch_deg = 0.0;
  double target_deg = 0.0;
  double voltage = 0.0;  // applied volts after clamping/denormalization

  bool operator==(const StepInfo&) const = default;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool truncated = false;     // |pitch| >= truncation_bound
  bool episode_done = false;  // truncated or step count reached horizon
  StepInfo info;

  bool operator==(const StepResult&) const = default;
};

// Target profile 0, 5, -5, 20, -20, 40, -40, 0 deg, each held 10 s
// (100 samples); indices beyond the profile hold the final 0 deg.
double fixed_profile_target(long step_index);

// With probability target_redraw_prob returns a fresh Uniform(target_range)
// sample, else `current`. Radians in and out.
double redraw_target(double current, Rng& rng, const FormulationConfig& cfg);

// -|pitch - target|, radians.
double base_reward(double pitch, double target);

// base * min(remaining_steps, clamp); applied only on the truncating step.
double truncation_reward(double base, long remaining_steps,
                         std::optional<long> clamp);

// coeff * population standard deviation of the windowed normalized commands.
double action_penalty(std::span<const double> window, double coeff);

// pitch and target divided by truncation_bound, velocity divided by
// velocity_norm_scale.
Observation normalize_observation(const Observation& raw,
                                  const FormulationConfig& cfg);

// Normalized mode: clamp to [-1, 1] then scale by v_max. Raw mode: clamp to
// [-v_max, v_max] and pass through.
double denormalize_action(double action, const FormulationConfig& cfg,
                          double v_max);

// The episodic MDP around the plant. Value semantics; one instance per
// worker, rng owned per instance.
class PitchEnv {
 public:
  PitchEnv(FormulationConfig cfg, PlantParams plant);

  // Starts a new episode. Deterministic given seed.
  Observation reset(uint64_t seed);

  // Applies one action. Throws ContractViolation when called before reset
  // or after episode_done.
  StepResult step(double action);

  long episode_steps() const { return episode_len_; }
  const FormulationConfig& config() const { return cfg_; }
  const PlantParams& plant_params() const { return plant_; }
  const PlantState& state() const { return state_; }
  bool done() const { return done_; }

 private:
  FormulationConfig cfg_;
  PlantParams plant_;
  long episode_len_ = 0;
  size_t window_capacity_ = 0;

  PlantState state_;
  double target_ = 0.0;      // rad
  double prev_pitch_ = 0.0;  // rad
  std::vector<double> command_window_;
  Rng rng_{0};
  bool ready_ = false;
  bool done_ = true;
};

}  // namespace formulab

#endif  // FORMULAB_ENV_HPP_
