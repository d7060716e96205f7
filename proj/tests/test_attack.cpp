#include <doctest.h>

#include <cmath>

#include "artrd/attack.hpp"
#include "artrd/envs.hpp"

using namespace artrd;
using attack::AdvVariant;
using numcore::ParamSet;

namespace {

/// Policy whose mean is a constant, independent of the observation.
ParamSet constant_policy(int obs_dim, double a0, double a1) {
  ParamSet p = numcore::make_zero_mlp({obs_dim, 2}, 2);
  // Single linear layer: zero weights, bias row carries the constant.
  p.weights[static_cast<std::size_t>(obs_dim) * 2 + 0] = a0;
  p.weights[static_cast<std::size_t>(obs_dim) * 2 + 1] = a1;
  return p;
}

}  // namespace

TEST_CASE("adversary observation sizes") {
  envs::EnvConfig cfg;
  CHECK(attack::adv_obs_dim(AdvVariant::StateUnaware, cfg) == 5);
  CHECK(attack::adv_obs_dim(AdvVariant::StateAware, cfg) == cfg.obs_dim() + 5);
  cfg.lidar_bins = 16;
  CHECK(attack::adv_obs_dim(AdvVariant::StateAware, cfg) == 22 + 5);
}

TEST_CASE("adversary observation payload order") {
  const std::vector<double> nominal_obs{9, 8, 7};
  const std::vector<double> action{0.25, -0.5};
  const std::array<double, 3> features{0.6, -0.8, 1.25};

  std::vector<double> su(5);
  attack::make_adv_observation(AdvVariant::StateUnaware, nominal_obs, action, features, su);
  CHECK(su == std::vector<double>{0.25, -0.5, 0.6, -0.8, 1.25});

  std::vector<double> sa(8);
  attack::make_adv_observation(AdvVariant::StateAware, nominal_obs, action, features, sa);
  CHECK(sa == std::vector<double>{9, 8, 7, 0.25, -0.5, 0.6, -0.8, 1.25});
}

TEST_CASE("adversary reward branches") {
  attack::AttackConfig cfg;
  // Arrival pays the flat bonus, nothing else.
  CHECK(attack::adv_reward(1.0, 0.2, true, false, cfg) == doctest::Approx(1.0));
  CHECK(attack::adv_reward(1.0, 0.2, true, true, cfg) == doctest::Approx(1.0));
  // Otherwise distance progress, minus the penalty while parked on the
  // nominal goal.
  CHECK(attack::adv_reward(1.0, 0.7, false, false, cfg) == doctest::Approx(0.3));
  CHECK(attack::adv_reward(1.0, 0.7, false, true, cfg) == doctest::Approx(0.3 - 1.0));

  attack::AttackConfig custom;
  custom.goal_bonus = 2.5;
  custom.penalty = 0.25;
  CHECK(attack::adv_reward(0.0, 0.0, true, false, custom) == doctest::Approx(2.5));
  CHECK(attack::adv_reward(0.5, 0.6, false, true, custom) == doctest::Approx(-0.1 - 0.25));
}

TEST_CASE("attack config validation") {
  attack::AttackConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.perturbation_bound = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.penalty = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("perturbation is clamped before being added, sum clamped after") {
  envs::EnvConfig ec;
  attack::AttackConfig ac;
  ac.perturbation_bound = 0.3;
  attack::AdvEnv env(ec, ac, constant_policy(ec.obs_dim(), 0.9, -0.2));

  std::vector<double> obs(static_cast<std::size_t>(env.obs_dim()));
  env.reset(3, obs);
  CHECK(env.nominal_action()[0] == doctest::Approx(0.9));
  CHECK(env.nominal_action()[1] == doctest::Approx(-0.2));

  const StepResult r = env.step(std::vector<double>{0.5, -2.0}, obs);
  CHECK(r.applied[0] == doctest::Approx(1.0));   // clamp_unit(0.9 + 0.3)
  CHECK(r.applied[1] == doctest::Approx(-0.5));  // -0.2 + clamp(-2.0) = -0.5
}

TEST_CASE("adversary sees the raw victim command, plant gets the clamped one") {
  envs::EnvConfig ec;
  attack::AttackConfig ac;
  attack::AdvEnv env(ec, ac, constant_policy(ec.obs_dim(), 3.0, 0.0));

  std::vector<double> obs(static_cast<std::size_t>(env.obs_dim()));
  env.reset(4, obs);
  CHECK(obs[0] == doctest::Approx(3.0));  // raw mean, beyond the actuator range
  const StepResult r = env.step(std::vector<double>{0.0, 0.0}, obs);
  CHECK(r.applied[0] == doctest::Approx(1.0));
  CHECK(obs[0] == doctest::Approx(3.0));  // refreshed for the next state
}

TEST_CASE("state-unaware observation carries only the payload") {
  envs::EnvConfig ec;
  attack::AttackConfig ac;
  attack::AdvEnv env(ec, ac, constant_policy(ec.obs_dim(), 0.1, 0.2));
  CHECK(env.obs_dim() == 5);
  std::vector<double> obs(5);
  env.reset(7, obs);
  const auto features = envs::adversarial_goal_features(env.state(), ec);
  CHECK(obs[0] == doctest::Approx(0.1));
  CHECK(obs[1] == doctest::Approx(0.2));
  CHECK(obs[2] == doctest::Approx(features[0]));
  CHECK(obs[3] == doctest::Approx(features[1]));
  CHECK(obs[4] == doctest::Approx(features[2]));
}

TEST_CASE("state-aware observation prepends the victim view") {
  envs::EnvConfig ec;
  attack::AttackConfig ac;
  ac.variant = AdvVariant::StateAware;
  attack::AdvEnv env(ec, ac, constant_policy(ec.obs_dim(), 0.0, 0.0));
  CHECK(env.obs_dim() == ec.obs_dim() + 5);
  std::vector<double> obs(static_cast<std::size_t>(env.obs_dim()));
  env.reset(7, obs);
  const auto victim = env.nominal_observation();
  for (int i = 0; i < ec.obs_dim(); ++i)
    CHECK(obs[static_cast<std::size_t>(i)] == victim[static_cast<std::size_t>(i)]);
}

TEST_CASE("zero perturbation reproduces the unattacked trajectory exactly") {
  envs::EnvConfig ec;
  ec.max_steps = 300;
  // Observation-dependent victim so the trajectories are not trivially
  // static: drive when the goal is ahead, steer by the lateral compass.
  ParamSet victim = constant_policy(ec.obs_dim(), 0.0, 0.0);
  victim.weights[3 * 2 + 0] = 0.5;  // compass x -> forward
  victim.weights[4 * 2 + 1] = 0.9;  // compass y -> turn
  victim.weights[static_cast<std::size_t>(ec.obs_dim()) * 2 + 0] = 0.3;  // forward bias

  attack::AttackConfig ac;
  attack::AdvEnv wrapped(ec, ac, victim);
  envs::NominalEnv plain(ec);

  std::vector<double> adv_obs(static_cast<std::size_t>(wrapped.obs_dim()));
  std::vector<double> obs(static_cast<std::size_t>(plain.obs_dim()));
  wrapped.reset(11, adv_obs);
  plain.reset(11, obs);

  numcore::MlpScratch scratch;
  std::vector<double> mean(2);
  const std::vector<double> zero{0.0, 0.0};
  for (int t = 0; t < ec.max_steps; ++t) {
    numcore::mlp_forward(victim, obs, mean, scratch);
    const StepResult ra = wrapped.step(zero, adv_obs);
    const StepResult rb = plain.step(mean, obs);
    REQUIRE(ra.applied[0] == rb.applied[0]);
    REQUIRE(ra.applied[1] == rb.applied[1]);
    REQUIRE(wrapped.state().position.x == plain.state().position.x);
    REQUIRE(wrapped.state().position.y == plain.state().position.y);
    REQUIRE(wrapped.state().heading == plain.state().heading);
    REQUIRE(wrapped.state().nominal_goal.x == plain.state().nominal_goal.x);
    REQUIRE(wrapped.state().adversarial_goal.y == plain.state().adversarial_goal.y);
    REQUIRE(ra.reached_nominal_goal == rb.reached_nominal_goal);
  }
}

TEST_CASE("victim checkpoint must fit the plant") {
  envs::EnvConfig ec;
  attack::AttackConfig ac;
  CHECK_THROWS_AS(attack::AdvEnv(ec, ac, constant_policy(ec.obs_dim() + 1, 0.0, 0.0)),
                  CheckpointError);
  ParamSet one_output = numcore::make_zero_mlp({ec.obs_dim(), 1}, 1);
  CHECK_THROWS_AS(attack::AdvEnv(ec, ac, one_output), CheckpointError);
}

TEST_CASE("adversary training runs deterministically") {
  envs::EnvConfig ec;
  ec.max_steps = 256;
  attack::AttackConfig ac;
  ppo::PpoConfig pc;
  pc.total_steps = 2048;
  pc.update_interval = 1024;
  pc.batch_size = 256;
  pc.epochs_per_update = 2;
  pc.policy_hidden = {16};
  pc.value_hidden = {16};

  const ParamSet victim = constant_policy(ec.obs_dim(), 0.4, 0.1);
  const ppo::TrainResult a = attack::train_adversary(ec, ac, pc, victim, 3);
  const ppo::TrainResult b = attack::train_adversary(ec, ac, pc, victim, 3);
  CHECK(a.policy.weights == b.policy.weights);
  CHECK(a.policy.input_dim() == 5);
  CHECK(!a.curve.empty());
  CHECK(a.curve.front().episode_return == b.curve.front().episode_return);
}
