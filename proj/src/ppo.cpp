#include "formulab/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "formulab/errors.hpp"

namespace formulab {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)
}

void PpoConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be > 0");
  if (n_steps < 1) throw ConfigError("ppo.n_steps must be >= 1");
  if (minibatch_size < 1) throw ConfigError("ppo.minibatch_size must be >= 1");
  if (n_steps % minibatch_size != 0) {
    throw ConfigError("ppo.n_steps must be divisible by ppo.minibatch_size");
  }
  if (epochs < 1) throw ConfigError("ppo.epochs must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw ConfigError("ppo.gae_lambda must be in [0, 1]");
  }
  if (!(clip_range > 0.0)) throw ConfigError("ppo.clip_range must be > 0");
  if (!(entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef must be >= 0");
  if (!(value_coef >= 0.0)) throw ConfigError("ppo.value_coef must be >= 0");
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo.max_grad_norm must be > 0");
  if (hidden_sizes.empty()) throw ConfigError("ppo.hidden_sizes must be non-empty");
  if (total_steps < 1) throw ConfigError("ppo.total_steps must be >= 1");
}

namespace {

std::vector<int> net_sizes(int obs_dim, const std::vector<int>& hidden) {
  std::vector<int> sizes;
  sizes.push_back(obs_dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

}  // namespace

PolicyParams::PolicyParams(int obs_dim, const std::vector<int>& hidden_sizes)
    : obs_dim_(obs_dim),
      hidden_sizes_(hidden_sizes),
      policy_(net_sizes(obs_dim, hidden_sizes)),
      value_(net_sizes(obs_dim, hidden_sizes)) {
  theta = Eigen::VectorXd::Zero(policy_.param_count() + 1 + value_.param_count());
}

PolicyParams PolicyParams::init(const PpoConfig& cfg, int obs_dim, Rng& rng) {
  PolicyParams p(obs_dim, cfg.hidden_sizes);
  // Orthogonal init; small policy head keeps the initial action mean near 0.
  p.policy_.init_orthogonal(p.theta.segment(0, p.policy_.param_count()), rng,
                            std::sqrt(2.0), 0.01);
  p.theta(p.log_std_index()) = cfg.init_log_std;
  p.value_.init_orthogonal(
      p.theta.segment(p.value_offset(), p.value_.param_count()), rng,
      std::sqrt(2.0), 1.0);
  return p;
}

PolicyOutput policy_forward(const PolicyParams& params, const Observation& obs) {
  Eigen::Matrix<double, 1, 3> x;
  x << obs.pitch, obs.angular_velocity, obs.target;
  const double mean = params.policy_net().forward(params.policy_theta(), x)(0, 0);
  const double value = params.value_net().forward(params.value_theta(), x)(0, 0);
  return PolicyOutput{mean, params.log_std(), value};
}

double gaussian_log_prob(double x, double mean, double log_std) {
  const double z = (x - mean) / std::exp(log_std);
  return -0.5 * z * z - log_std - 0.5 * kLog2Pi;
}

std::pair<double, double> sample_action(double mean, double log_std, Rng& rng) {
  const double action = mean + std::exp(log_std) * rng.gaussian();
  return {action, gaussian_log_prob(action, mean, log_std)};
}

RolloutBuffer::RolloutBuffer(int n_steps, int obs_dim)
    : observations(n_steps, obs_dim),
      actions(n_steps),
      rewards(n_steps),
      values(n_steps),
      log_probs(n_steps),
      dones(n_steps, 0),
      advantages(n_steps),
      returns(n_steps),
      size(n_steps) {}

std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_gae(
    const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
    const std::vector<uint8_t>& dones, double last_value, double gamma,
    double lambda) {
  const long n = rewards.size();
  if (values.size() != n || static_cast<long>(dones.size()) != n) {
    throw ContractViolation("compute_gae: array length mismatch");
  }
  Eigen::VectorXd advantages(n);
  Eigen::VectorXd returns(n);
  double gae = 0.0;
  for (long t = n - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double next_value = (t == n - 1) ? last_value : values(t + 1);
    const double delta =
        rewards(t) + gamma * next_value * not_done - values(t);
    gae = delta + gamma * lambda * not_done * gae;
    advantages(t) = gae;
    returns(t) = gae + values(t);
  }
  return {std::move(advantages), std::move(returns)};
}

UpdateDiagnostics ppo_minibatch_loss(const PolicyParams& shapes,
                                     const Eigen::VectorXd& theta,
                                     const Minibatch& mb, const PpoConfig& cfg,
                                     Eigen::VectorXd* grad) {
  const long n = mb.actions.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Mlp& pnet = shapes.policy_net();
  const Mlp& vnet = shapes.value_net();
  const auto policy_theta = theta.segment(0, pnet.param_count());
  const auto value_theta = theta.segment(shapes.value_offset(), vnet.param_count());
  const double log_std = theta(shapes.log_std_index());
  const double inv_var = std::exp(-2.0 * log_std);

  Mlp::Cache pcache, vcache;
  const Eigen::VectorXd mean =
      pnet.forward(policy_theta, mb.observations, grad ? &pcache : nullptr);
  const Eigen::VectorXd value =
      vnet.forward(value_theta, mb.observations, grad ? &vcache : nullptr);

  UpdateDiagnostics diag;
  const Eigen::ArrayXd residual = (mb.actions - mean).array();
  const Eigen::ArrayXd log_probs =
      -0.5 * residual.square() * inv_var - log_std - 0.5 * kLog2Pi;
  const Eigen::ArrayXd log_ratio = log_probs - mb.old_log_probs.array();
  const Eigen::ArrayXd ratio = log_ratio.exp();
  const Eigen::ArrayXd adv = mb.advantages.array();

  const Eigen::ArrayXd unclipped = -adv * ratio;
  const Eigen::ArrayXd clipped =
      -adv * ratio.min(1.0 + cfg.clip_range).max(1.0 - cfg.clip_range);
  // per-sample surrogate: max of the two branches; ties go to the unclipped
  // branch so the gradient matches a subgradient of the max
  const Eigen::ArrayXd pg = unclipped.max(clipped);
  diag.policy_loss = pg.mean();
  diag.clip_fraction =
      ((ratio - 1.0).abs() > cfg.clip_range).cast<double>().mean();
  diag.approx_kl = ((ratio - 1.0) - log_ratio).mean();

  const Eigen::ArrayXd verr = value.array() - mb.returns.array();
  diag.value_loss = verr.square().mean();

  diag.entropy = 0.5 * (1.0 + kLog2Pi) + log_std;

  diag.total_loss = diag.policy_loss + cfg.value_coef * diag.value_loss -
                    cfg.entropy_coef * diag.entropy;

  if (grad) {
    grad->setZero();
    // d pg_i / d logp_i = -A_i * ratio_i on the unclipped branch, 0 where the
    // clipped branch is strictly larger (there the ratio is saturated).
    Eigen::ArrayXd dlogp(n);
    for (long i = 0; i < n; ++i) {
      dlogp(i) = (unclipped(i) >= clipped(i)) ? -adv(i) * ratio(i) * inv_n : 0.0;
    }
    // d logp / d mean = (a - mean) / sigma^2
    const Eigen::MatrixXd dmean = (dlogp * residual * inv_var).matrix();
    pnet.backward(policy_theta, pcache, dmean,
                  grad->segment(0, pnet.param_count()));
    // d logp / d log_std = (a - mean)^2 / sigma^2 - 1
    (*grad)(shapes.log_std_index()) =
        (dlogp * (residual.square() * inv_var - 1.0)).sum() - cfg.entropy_coef;

    const Eigen::MatrixXd dvalue =
        (2.0 * cfg.value_coef * inv_n * verr).matrix();
    vnet.backward(value_theta, vcache, dvalue,
                  grad->segment(shapes.value_offset(), vnet.param_count()));
  }
  return diag;
}

UpdateDiagnostics ppo_update(PolicyParams& params, Adam& optimizer,
                             const RolloutBuffer& buffer, const PpoConfig& cfg,
                             Rng& shuffle_rng) {
  const int n = buffer.size;
  if (n % cfg.minibatch_size != 0) {
    throw ContractViolation("buffer size not divisible by minibatch size");
  }

  Eigen::VectorXd advantages = buffer.advantages;
  if (n > 1) {
    const double mean = advantages.mean();
    const double sample_std = std::sqrt(
        (advantages.array() - mean).square().sum() / static_cast<double>(n - 1));
    advantages = ((advantages.array() - mean) / (sample_std + 1e-8)).matrix();
  }

  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);

  Eigen::VectorXd grad(params.theta.size());
  UpdateDiagnostics total;
  long batches = 0;

  Minibatch mb;
  mb.observations.resize(cfg.minibatch_size, buffer.observations.cols());
  mb.actions.resize(cfg.minibatch_size);
  mb.old_log_probs.resize(cfg.minibatch_size);
  mb.advantages.resize(cfg.minibatch_size);
  mb.returns.resize(cfg.minibatch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(indices);
    for (int start = 0; start < n; start += cfg.minibatch_size) {
      // n_steps % minibatch_size == 0 is enforced by PpoConfig::validate
      const int m = cfg.minibatch_size;
      for (int i = 0; i < m; ++i) {
        const int idx = indices[start + i];
        mb.observations.row(i) = buffer.observations.row(idx);
        mb.actions(i) = buffer.actions(idx);
        mb.old_log_probs(i) = buffer.log_probs(idx);
        mb.advantages(i) = advantages(idx);
        mb.returns(i) = buffer.returns(idx);
      }

      const UpdateDiagnostics diag =
          ppo_minibatch_loss(params, params.theta, mb, cfg, &grad);
      if (!std::isfinite(diag.total_loss) || !grad.allFinite()) {
        throw UpdateAborted("non-finite PPO loss or gradient", diag);
      }

      const double norm = grad.norm();
      if (norm > cfg.max_grad_norm) {
        grad *= cfg.max_grad_norm / (norm + 1e-6);
      }
      optimizer.step(params.theta, grad);

      total.policy_loss += diag.policy_loss;
      total.value_loss += diag.value_loss;
      total.entropy += diag.entropy;
      total.clip_fraction += diag.clip_fraction;
      total.approx_kl += diag.approx_kl;
      total.total_loss += diag.total_loss;
      ++batches;
    }
  }

  const double inv_b = 1.0 / static_cast<double>(batches);
  total.policy_loss *= inv_b;
  total.value_loss *= inv_b;
  total.entropy *= inv_b;
  total.clip_fraction *= inv_b;
  total.approx_kl *= inv_b;
  total.total_loss *= inv_b;
  return total;
}

TrainResult train(const PitchEnv& env_prototype, const PpoConfig& cfg,
                  uint64_t seed, long eval_interval,
                  const EvalCallback& eval_callback) {
  cfg.validate();
  constexpr int kObsDim = 3;

  Rng init_rng(mix_seed(seed, 0));
  Rng action_rng(mix_seed(seed, 1));
  Rng shuffle_rng(mix_seed(seed, 2));

  TrainResult result(kObsDim, cfg.hidden_sizes);
  result.params = PolicyParams::init(cfg, kObsDim, init_rng);
  Adam optimizer(result.params.param_count(), cfg.learning_rate);

  PitchEnv env = env_prototype;
  uint64_t episode_counter = 0;
  Observation obs = env.reset(mix_seed(seed, 1000 + episode_counter++));

  RolloutBuffer buffer(cfg.n_steps, kObsDim);
  UpdateDiagnostics last_diag;
  double episode_return = 0.0;
  double last_episode_return = std::numeric_limits<double>::quiet_NaN();
  long global_step = 0;

  try {
    while (global_step < cfg.total_steps) {
      for (int t = 0; t < cfg.n_steps; ++t) {
        const PolicyOutput out = policy_forward(result.params, obs);
        const auto [action, log_prob] =
            sample_action(out.mean, out.log_std, action_rng);

        const StepResult sr = env.step(action);
        buffer.observations.row(t) << obs.pitch, obs.angular_velocity, obs.target;
        buffer.actions(t) = action;
        buffer.rewards(t) = sr.reward;
        buffer.values(t) = out.value;
        buffer.log_probs(t) = log_prob;
        buffer.dones[t] = sr.episode_done ? 1 : 0;

        episode_return += sr.reward;
        obs = sr.observation;
        if (sr.episode_done) {
          last_episode_return = episode_return;
          episode_return = 0.0;
          obs = env.reset(mix_seed(seed, 1000 + episode_counter++));
        }

        ++global_step;
        if (eval_callback && eval_interval > 0 &&
            global_step % eval_interval == 0 &&
            global_step <= cfg.total_steps) {
          const auto [dev, volt] = eval_callback(global_step, result.params);
          result.log.push_back(TrainLogRow{global_step, last_episode_return,
                                           dev, volt, last_diag.clip_fraction,
                                           last_diag.approx_kl});
        }
      }

      const double last_value = policy_forward(result.params, obs).value;
      auto [advantages, returns] =
          compute_gae(buffer.rewards, buffer.values, buffer.dones, last_value,
                      cfg.gamma, cfg.gae_lambda);
      buffer.advantages = std::move(advantages);
      buffer.returns = std::move(returns);

      last_diag = ppo_update(result.params, optimizer, buffer, cfg, shuffle_rng);
      ++result.updates;
    }
  } catch (const UpdateAborted& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }
  return result;
}

}  // namespace formulab
