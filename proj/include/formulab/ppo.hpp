#ifndef FORMULAB_PPO_HPP_
#define FORMULAB_PPO_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "formulab/env.hpp"
#include "formulab/mlp.hpp"
#include "formulab/rng.hpp"

namespace formulab {

// Defaults pinned to the reference PPO implementation's published values,
// so runs reproduce without depending on it.
struct PpoConfig {
  double learning_rate = 3e-4;
  int n_steps = 2048;
  int minibatch_size = 64;
  int epochs = 10;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_range = 0.2;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  std::vector<int> hidden_sizes = {64, 64};
  double init_log_std = 0.0;
  long total_steps = 1000000;

  void validate() const;

  bool operator==(const PpoConfig&) const = default;
};

// Gaussian policy (state-independent log-std) plus value function, all
// parameters in one flat vector laid out [policy MLP | log_std | value MLP].
class PolicyParams {
 public:
  PolicyParams(int obs_dim, const std::vector<int>& hidden_sizes);

  static PolicyParams init(const PpoConfig& cfg, int obs_dim, Rng& rng);

  const Mlp& policy_net() const { return policy_; }
  const Mlp& value_net() const { return value_; }
  const std::vector<int>& hidden_sizes() const { return hidden_sizes_; }
  int obs_dim() const { return obs_dim_; }
  int param_count() const { return static_cast<int>(theta.size()); }
  int log_std_index() const { return policy_.param_count(); }
  int value_offset() const { return policy_.param_count() + 1; }

  double log_std() const { return theta(log_std_index()); }
  auto policy_theta() const { return theta.segment(0, policy_.param_count()); }
  auto value_theta() const {
    return theta.segment(value_offset(), value_.param_count());
  }

  Eigen::VectorXd theta;

 private:
  int obs_dim_;
  std::vector<int> hidden_sizes_;
  Mlp policy_;
  Mlp value_;
};

struct PolicyOutput {
  double mean = 0.0;
  double log_std = 0.0;
  double value = 0.0;
};

// Deterministic forward pass for a single observation.
PolicyOutput policy_forward(const PolicyParams& params, const Observation& obs);

// Exact Gaussian log-density.
double gaussian_log_prob(double x, double mean, double log_std);

// Draws a ~ N(mean, exp(log_std)^2); log_prob refers to the unclamped sample.
std::pair<double, double> sample_action(double mean, double log_std, Rng& rng);

// Fixed-length batch of transitions plus the derived advantage/return arrays.
struct RolloutBuffer {
  RolloutBuffer(int n_steps, int obs_dim);

  Eigen::MatrixXd observations;  // n x obs_dim
  Eigen::VectorXd actions;
  Eigen::VectorXd rewards;
  Eigen::VectorXd values;
  Eigen::VectorXd log_probs;
  std::vector<uint8_t> dones;    // step ended the episode
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
  int size = 0;
};

// delta_t = r_t + gamma*v_{t+1}*(1-done_t) - v_t;
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}; returns = A + v.
// v_{T} is last_value.
std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_gae(
    const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
    const std::vector<uint8_t>& dones, double last_value, double gamma,
    double lambda);

struct UpdateDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  double total_loss = 0.0;
};

// PPO update hit a non-finite loss.
class UpdateAborted : public std::runtime_error {
 public:
  UpdateAborted(const std::string& msg, UpdateDiagnostics diag)
      : std::runtime_error(msg), diagnostics(diag) {}
  UpdateDiagnostics diagnostics;
};

// One minibatch worth of fixed training data.
struct Minibatch {
  Eigen::MatrixXd observations;
  Eigen::VectorXd actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;  // already normalized
  Eigen::VectorXd returns;
};

// Clipped-surrogate loss
//   mean( max(-ratio*A, -clip(ratio)*A) + c_v*(V-R)^2 ) - c_e*H
// evaluated at `theta`; writes d loss / d theta into `grad` when non-null.
// Exposed at this granularity so tests can finite-difference it.
UpdateDiagnostics ppo_minibatch_loss(const PolicyParams& shapes,
                                     const Eigen::VectorXd& theta,
                                     const Minibatch& mb, const PpoConfig& cfg,
                                     Eigen::VectorXd* grad);

// Normalizes advantages over the whole buffer, then runs epochs of shuffled
// minibatches with global gradient-norm clipping and Adam. Returns mean
// diagnostics over all minibatches. Throws UpdateAborted on non-finite loss.
UpdateDiagnostics ppo_update(PolicyParams& params, Adam& optimizer,
                             const RolloutBuffer& buffer, const PpoConfig& cfg,
                             Rng& shuffle_rng);

struct TrainLogRow {
  long global_step = 0;
  double episode_return = 0.0;  // most recently completed episode; NaN before
  double eval_mean_deviation_deg = 0.0;
  double eval_mean_abs_voltage = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// Runs evaluation when the trainer pauses; returns
// (mean deviation deg, mean abs voltage).
using EvalCallback =
    std::function<std::pair<double, double>(long global_step,
                                            const PolicyParams& params)>;

struct TrainResult {
  TrainResult(int obs_dim, const std::vector<int>& hidden)
      : params(obs_dim, hidden) {}
  PolicyParams params;
  std::vector<TrainLogRow> log;
  long updates = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Rollout-collect / update loop until total_steps; env resets on episode
// end; evaluation callback fires at every multiple of eval_interval.
// Fully deterministic given seed.
TrainResult train(const PitchEnv& env_prototype, const PpoConfig& cfg,
                  uint64_t seed, long eval_interval,
                  const EvalCallback& eval_callback);

}  // namespace formulab

#endif  // FORMULAB_PPO_HPP_
