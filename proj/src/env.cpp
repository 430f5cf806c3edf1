#include "formulab/env.hpp"

#include <algorithm>
#include <cmath>

#include "formulab/errors.hpp"

namespace formulab {

FormulationConfig FormulationConfig::baseline() {
  return FormulationConfig{};
}

FormulationConfig FormulationConfig::new_setting() {
  FormulationConfig cfg;
  cfg.stop_time_s = 100000.0;
  cfg.target_mode = TargetMode::kRandomRedraw;
  cfg.initial_tilt_mode = InitialTiltMode::kUniformRandom;
  cfg.normalize_obs = true;
  cfg.normalize_action = true;
  cfg.action_penalty_coeff = 0.25;
  cfg.truncation_penalty_clamp = 800;
  return cfg;
}

long FormulationConfig::episode_steps(double dt) const {
  const double ratio = stop_time_s / dt;
  const long n = std::lround(ratio);
  if (n <= 0 || std::abs(ratio - static_cast<double>(n)) > 1e-6) {
    throw ConfigError("env.stop_time_s / plant.dt must be a positive integer");
  }
  return n;
}

void FormulationConfig::validate(const PlantParams& plant) const {
  plant.validate();
  episode_steps(plant.dt);
  if (!(target_redraw_prob >= 0.0 && target_redraw_prob <= 1.0)) {
    throw ConfigError("env.target_redraw_prob must be in [0, 1]");
  }
  for (const auto& range : {target_range_deg, initial_tilt_range_deg}) {
    if (!(range[0] <= range[1]) || range[0] <= -90.0 || range[1] >= 90.0) {
      throw ConfigError("env angle ranges must be ordered and inside (-90, 90) deg");
    }
  }
  if (!(action_penalty_coeff >= 0.0)) {
    throw ConfigError("env.action_penalty must be >= 0");
  }
  if (!(penalty_window_s > 0.0)) {
    throw ConfigError("env.penalty_window_s must be > 0");
  }
  if (!(velocity_norm_scale > 0.0)) {
    throw ConfigError("env.velocity_norm_scale must be > 0");
  }
  if (!(truncation_bound > 0.0)) {
    throw ConfigError("env.truncation_bound_rad must be > 0");
  }
  if (truncation_penalty_clamp && *truncation_penalty_clamp < 0) {
    throw ConfigError("env.truncation_penalty_clamp must be >= 0");
  }
}

namespace {
constexpr double kProfileDeg[] = {0.0, 5.0, -5.0, 20.0, -20.0, 40.0, -40.0, 0.0};
constexpr long kProfileHoldSteps = 100;  // 10 s at 0.1 s
constexpr long kProfileSegments = 8;
}  // namespace

double fixed_profile_target(long step_index) {
  const long seg = std::min(step_index / kProfileHoldSteps, kProfileSegments - 1);
  return deg_to_rad(kProfileDeg[seg]);
}

double redraw_target(double current, Rng& rng, const FormulationConfig& cfg) {
  if (rng.uniform() < cfg.target_redraw_prob) {
    return deg_to_rad(
        rng.uniform(cfg.target_range_deg[0], cfg.target_range_deg[1]));
  }
  return current;
}

double base_reward(double pitch, double target) {
  return -std::abs(pitch - target);
}

double truncation_reward(double base, long remaining_steps,
                         std::optional<long> clamp) {
  const long scale = clamp ? std::min(remaining_steps, *clamp) : remaining_steps;
  return base * static_cast<double>(scale);
}

double action_penalty(std::span<const double> window, double coeff) {
  const size_t n = window.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double c : window) mean += c;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double c : window) var += (c - mean) * (c - mean);
  var /= static_cast<double>(n);
  return coeff * std::sqrt(var);
}

Observation normalize_observation(const Observation& raw,
                                  const FormulationConfig& cfg) {
  return Observation{raw.pitch / cfg.truncation_bound,
                     raw.angular_velocity / cfg.velocity_norm_scale,
                     raw.target / cfg.truncation_bound};
}

double denormalize_action(double action, const FormulationConfig& cfg,
                          double v_max) {
  if (!std::isfinite(action)) {
    throw ContractViolation("non-finite action");
  }
  if (cfg.normalize_action) {
    return std::clamp(action, -1.0, 1.0) * v_max;
  }
  return std::clamp(action, -v_max, v_max);
}

PitchEnv::PitchEnv(FormulationConfig cfg, PlantParams plant)
    : cfg_(cfg), plant_(plant) {
  cfg_.validate(plant_);
  episode_len_ = cfg_.episode_steps(plant_.dt);
  window_capacity_ = static_cast<size_t>(
      std::ceil(cfg_.penalty_window_s / plant_.dt - 1e-9));
  window_capacity_ = std::max<size_t>(window_capacity_, 1);
}

Observation PitchEnv::reset(uint64_t seed) {
  rng_ = Rng(seed);

  double pitch0 = 0.0;
  if (cfg_.initial_tilt_mode == InitialTiltMode::kUniformRandom) {
    pitch0 = deg_to_rad(rng_.uniform(cfg_.initial_tilt_range_deg[0],
                                     cfg_.initial_tilt_range_deg[1]));
  }
  state_ = PlantState{pitch0, 0.0, 0};
  prev_pitch_ = pitch0;

  if (cfg_.target_mode == TargetMode::kFixedProfile) {
    target_ = fixed_profile_target(0);
  } else {
    target_ = deg_to_rad(
        rng_.uniform(cfg_.target_range_deg[0], cfg_.target_range_deg[1]));
  }

  command_window_.clear();
  ready_ = true;
  done_ = false;

  Observation obs{state_.pitch, 0.0, target_};
  return cfg_.normalize_obs ? normalize_observation(obs, cfg_) : obs;
}

StepResult PitchEnv::step(double action) {
  if (!ready_) throw ContractViolation("step() before reset()");
  if (done_) throw ContractViolation("step() after episode end");

  const double voltage = denormalize_action(action, cfg_, plant_.v_max);
  state_ = plant_step(state_, voltage, plant_);

  if (cfg_.target_mode == TargetMode::kFixedProfile) {
    target_ = fixed_profile_target(state_.steps);
  } else {
    target_ = redraw_target(target_, rng_, cfg_);
  }

  const double omega = state_.pitch - prev_pitch_;
  prev_pitch_ = state_.pitch;

  double reward = base_reward(state_.pitch, target_);

  if (command_window_.size() == window_capacity_) {
    command_window_.erase(command_window_.begin());
  }
  command_window_.push_back(voltage / plant_.v_max);
  reward -= action_penalty(command_window_, cfg_.action_penalty_coeff);

  const bool truncated = std::abs(state_.pitch) >= cfg_.truncation_bound;
  if (truncated) {
    const long remaining = episode_len_ - state_.steps;
    reward = truncation_reward(reward, remaining, cfg_.truncation_penalty_clamp);
  }
  const bool episode_done = truncated || state_.steps >= episode_len_;
  done_ = episode_done;

  Observation raw{state_.pitch, omega, target_};
  StepResult result;
  result.observation = cfg_.normalize_obs ? normalize_observation(raw, cfg_) : raw;
  result.reward = reward;
  result.truncated = truncated;
  result.episode_done = episode_done;
  result.info = StepInfo{rad_to_deg(state_.pitch), rad_to_deg(target_), voltage};
  return result;
}

}  // namespace formulab
