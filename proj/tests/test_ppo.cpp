#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "formulab/env.hpp"
#include "formulab/errors.hpp"
#include "formulab/ppo.hpp"
#include "formulab/rng.hpp"
#include "gae_oracle.hpp"
#include "ppo_test_helpers.hpp"

using namespace formulab;
using formulab_test::random_minibatch;
using formulab_test::random_params;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("gaussian sampling: near-degenerate log_std returns the mean") {
  Rng rng(1);
  const auto [action, log_prob] = sample_action(0.37, -20.0, rng);
  CHECK(std::abs(action - 0.37) < 1e-6);
  (void)log_prob;
}

TEST_CASE("gaussian log density at the mean") {
  const double log_std = 0.3;
  CHECK(gaussian_log_prob(1.5, 1.5, log_std) ==
        doctest::Approx(-log_std - 0.5 * std::log(2.0 * kPi)).epsilon(1e-12));
}

TEST_CASE("empirical std of samples matches exp(log_std) within 2%") {
  Rng rng(42);
  const double log_std = -0.5;
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto [action, lp] = sample_action(0.0, log_std, rng);
    sum += action;
    sum_sq += action * action;
    (void)lp;
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(std - std::exp(log_std)) / std::exp(log_std) < 0.02);
}

TEST_CASE("policy_forward with zero weights returns zeros") {
  PolicyParams p(3, {8, 8});
  const PolicyOutput out = policy_forward(p, Observation{0.4, -0.2, 0.9});
  CHECK(out.mean == 0.0);
  CHECK(out.value == 0.0);
  CHECK(out.log_std == 0.0);
}

TEST_CASE("gae with lambda 0 collapses to the TD residual") {
  const int n = 20;
  Rng rng(7);
  VectorXd rewards(n), values(n);
  std::vector<uint8_t> dones(n, 0);
  for (int i = 0; i < n; ++i) {
    rewards(i) = rng.gaussian();
    values(i) = rng.gaussian();
    dones[i] = rng.uniform() < 0.15 ? 1 : 0;
  }
  const double last_value = rng.gaussian();
  const auto [adv, ret] = compute_gae(rewards, values, dones, last_value, 0.99, 0.0);
  for (int t = 0; t < n; ++t) {
    const double next = (t == n - 1) ? last_value : values(t + 1);
    const double delta =
        rewards(t) + 0.99 * next * (dones[t] ? 0.0 : 1.0) - values(t);
    CHECK(adv(t) == doctest::Approx(delta).epsilon(1e-12));
    CHECK(ret(t) == doctest::Approx(delta + values(t)).epsilon(1e-12));
  }
}

TEST_CASE("gae with lambda 1 and no dones equals the discounted-sum formula") {
  const int n = 20;
  const double gamma = 0.97;
  Rng rng(8);
  VectorXd rewards(n), values(n);
  const std::vector<uint8_t> dones(n, 0);
  for (int i = 0; i < n; ++i) {
    rewards(i) = rng.gaussian();
    values(i) = rng.gaussian();
  }
  const double last_value = rng.gaussian();
  const auto [adv, ret] = compute_gae(rewards, values, dones, last_value, gamma, 1.0);
  for (int t = 0; t < n; ++t) {
    double expected = -values(t);
    double discount = 1.0;
    for (int k = t; k < n; ++k) {
      expected += discount * rewards(k);
      discount *= gamma;
    }
    expected += discount * last_value;
    CHECK(adv(t) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("gae of an all-zero rollout is zero") {
  const VectorXd zeros = VectorXd::Zero(10);
  const std::vector<uint8_t> dones(10, 0);
  const auto [adv, ret] = compute_gae(zeros, zeros, dones, 0.0, 0.99, 0.95);
  CHECK(adv.norm() == 0.0);
  CHECK(ret.norm() == 0.0);
}

TEST_CASE("gae matches the independent n-step oracle") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 20;
    VectorXd rewards(n), values(n);
    std::vector<uint8_t> dones(n, 0);
    for (int i = 0; i < n; ++i) {
      rewards(i) = rng.gaussian();
      values(i) = rng.gaussian();
      dones[i] = rng.uniform() < 0.2 ? 1 : 0;
    }
    const double last_value = rng.gaussian();
    const double gamma = 0.99;
    for (double lambda : {0.0, 0.5, 1.0}) {
      const auto [adv, ret] =
          compute_gae(rewards, values, dones, last_value, gamma, lambda);
      const VectorXd oracle =
          gae_nstep_oracle(rewards, values, dones, last_value, gamma, lambda);
      for (int t = 0; t < n; ++t) {
        CHECK(std::abs(adv(t) - oracle(t)) < 1e-10);
      }
    }
  }
}

TEST_CASE("ppo loss gradient matches central finite differences") {
  PpoConfig cfg;
  cfg.hidden_sizes = {8, 8};
  cfg.entropy_coef = 0.01;  // exercise the entropy path too
  const PolicyParams params = random_params(3, cfg.hidden_sizes, 21);
  const Minibatch mb = random_minibatch(params, 5, 22, cfg.clip_range);

  VectorXd grad(params.theta.size());
  ppo_minibatch_loss(params, params.theta, mb, cfg, &grad);

  const double h = 1e-5;
  double worst = 0.0;
  for (int i = 0; i < params.theta.size(); ++i) {
    VectorXd tp = params.theta, tm = params.theta;
    tp(i) += h;
    tm(i) -= h;
    const double lp = ppo_minibatch_loss(params, tp, mb, cfg, nullptr).total_loss;
    const double lm = ppo_minibatch_loss(params, tm, mb, cfg, nullptr).total_loss;
    const double fd = (lp - lm) / (2.0 * h);
    const double rel = std::abs(grad(i) - fd) / std::max(1e-6, std::abs(fd));
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("clipped samples contribute no policy gradient") {
  PpoConfig cfg;
  cfg.hidden_sizes = {8, 8};
  const PolicyParams params = random_params(3, cfg.hidden_sizes, 33);

  const int n = 6;
  Minibatch mb;
  mb.observations.resize(n, 3);
  mb.actions.resize(n);
  mb.old_log_probs.resize(n);
  mb.advantages.resize(n);
  mb.returns.resize(n);
  Rng rng(34);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) mb.observations(i, j) = rng.uniform(-1, 1);
    mb.actions(i) = rng.gaussian();
    mb.advantages(i) = 1.0;  // positive advantage
    mb.returns(i) = rng.gaussian();
    const PolicyOutput out = policy_forward(
        params, Observation{mb.observations(i, 0), mb.observations(i, 1),
                            mb.observations(i, 2)});
    // old log prob below the new one: ratio = e^{0.3} > 1.2, clip active
    mb.old_log_probs(i) =
        gaussian_log_prob(mb.actions(i), out.mean, out.log_std) - 0.3;
  }

  VectorXd grad(params.theta.size());
  ppo_minibatch_loss(params, params.theta, mb, cfg, &grad);
  const int policy_count = params.policy_net().param_count();
  CHECK(grad.segment(0, policy_count).norm() == 0.0);
  CHECK(grad(params.log_std_index()) == 0.0);
  // the value head still learns
  CHECK(grad.segment(params.value_offset(),
                     params.value_net().param_count()).norm() > 0.0);
}

TEST_CASE("no-op update: zero advantages and perfect value fit") {
  PpoConfig cfg;
  cfg.hidden_sizes = {8, 8};
  cfg.n_steps = 16;
  cfg.minibatch_size = 16;
  cfg.epochs = 2;
  cfg.entropy_coef = 0.0;

  Rng init_rng(3);
  PolicyParams params = PolicyParams::init(cfg, 3, init_rng);
  const VectorXd before = params.theta;

  RolloutBuffer buffer(cfg.n_steps, 3);
  Rng rng(4);
  for (int t = 0; t < cfg.n_steps; ++t) {
    Observation obs{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const PolicyOutput out = policy_forward(params, obs);
    const auto [action, log_prob] = sample_action(out.mean, out.log_std, rng);
    buffer.observations.row(t) << obs.pitch, obs.angular_velocity, obs.target;
    buffer.actions(t) = action;
    buffer.log_probs(t) = log_prob;
    buffer.values(t) = out.value;
    buffer.advantages(t) = 0.0;
    buffer.returns(t) = out.value;  // value targets equal predictions
    buffer.rewards(t) = 0.0;
  }

  Adam opt(params.param_count(), cfg.learning_rate);
  Rng shuffle_rng(5);
  const UpdateDiagnostics diag = ppo_update(params, opt, buffer, cfg, shuffle_rng);
  CHECK(std::abs(diag.total_loss) < 1e-12);
  CHECK((params.theta - before).norm() == 0.0);
}

TEST_CASE("ratio one on the full buffer: surrogate equals zero") {
  PpoConfig cfg;
  cfg.hidden_sizes = {8, 8};
  cfg.n_steps = 32;
  cfg.minibatch_size = 32;  // first minibatch is the whole normalized buffer
  cfg.epochs = 1;

  Rng init_rng(6);
  PolicyParams params = PolicyParams::init(cfg, 3, init_rng);

  RolloutBuffer buffer(cfg.n_steps, 3);
  Rng rng(7);
  for (int t = 0; t < cfg.n_steps; ++t) {
    Observation obs{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const PolicyOutput out = policy_forward(params, obs);
    const auto [action, log_prob] = sample_action(out.mean, out.log_std, rng);
    buffer.observations.row(t) << obs.pitch, obs.angular_velocity, obs.target;
    buffer.actions(t) = action;
    buffer.log_probs(t) = log_prob;  // old == new -> ratio 1
    buffer.values(t) = out.value;
    buffer.advantages(t) = rng.gaussian();
    buffer.returns(t) = out.value;
    buffer.rewards(t) = 0.0;
  }

  Adam opt(params.param_count(), cfg.learning_rate);
  Rng shuffle_rng(8);
  const UpdateDiagnostics diag = ppo_update(params, opt, buffer, cfg, shuffle_rng);
  // surrogate = -mean(normalized advantages) = 0
  CHECK(std::abs(diag.policy_loss) < 1e-12);
  CHECK(diag.clip_fraction == 0.0);
}

TEST_CASE("advantage normalization: mean 0 and std 1 over the update") {
  // exposed indirectly: normalized advantages of a ratio-1 buffer make the
  // surrogate the negative advantage mean, checked above; here check the
  // moments directly on a copy of the normalization rule
  Rng rng(9);
  VectorXd adv(64);
  for (int i = 0; i < adv.size(); ++i) adv(i) = 3.0 + 2.5 * rng.gaussian();
  const double mean = adv.mean();
  const double sample_std =
      std::sqrt((adv.array() - mean).square().sum() / (adv.size() - 1));
  const VectorXd normalized = ((adv.array() - mean) / (sample_std + 1e-8)).matrix();
  CHECK(std::abs(normalized.mean()) < 1e-8);
  const double nstd = std::sqrt(
      (normalized.array() - normalized.mean()).square().sum() / (adv.size() - 1));
  CHECK(std::abs(nstd - 1.0) < 1e-6);
}

TEST_CASE("training: 4096 total steps with 2048-step rollouts is 2 updates") {
  PpoConfig cfg;
  cfg.total_steps = 4096;
  PitchEnv env(FormulationConfig::baseline(), PlantParams{});
  const TrainResult result = train(env, cfg, 0, 0, nullptr);
  CHECK(result.updates == 2);
  CHECK_FALSE(result.aborted);
}

TEST_CASE("training twice with the same seed is bit-identical") {
  PpoConfig cfg;
  cfg.total_steps = 4096;
  PitchEnv env(FormulationConfig::new_setting(), PlantParams{});
  const auto eval_cb = [&](long, const PolicyParams& p) {
    // cheap deterministic probe of the params
    return std::make_pair(p.theta.sum(), p.theta.norm());
  };
  const TrainResult a = train(env, cfg, 7, 2048, eval_cb);
  const TrainResult b = train(env, cfg, 7, 2048, eval_cb);
  REQUIRE(a.log.size() == b.log.size());
  REQUIRE(a.log.size() == 2);
  for (size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].eval_mean_deviation_deg == b.log[i].eval_mean_deviation_deg);
    CHECK(a.log[i].eval_mean_abs_voltage == b.log[i].eval_mean_abs_voltage);
    CHECK(a.log[i].clip_fraction == b.log[i].clip_fraction);
    CHECK(a.log[i].approx_kl == b.log[i].approx_kl);
  }
  CHECK((a.params.theta - b.params.theta).norm() == 0.0);
}

TEST_CASE("config validation") {
  PpoConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.n_steps = 100;  // not divisible by 64
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = PpoConfig{};
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
