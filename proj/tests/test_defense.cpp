#include <doctest.h>

#include <cmath>

#include "artrd/attack.hpp"
#include "artrd/defense.hpp"
#include "artrd/envs.hpp"

using namespace artrd;
using numcore::ParamSet;

namespace {

ParamSet constant_adversary(int in_dim, double d0, double d1) {
  ParamSet p = numcore::make_zero_mlp({in_dim, 2}, 2);
  p.weights[static_cast<std::size_t>(in_dim) * 2 + 0] = d0;
  p.weights[static_cast<std::size_t>(in_dim) * 2 + 1] = d1;
  return p;
}

ppo::PpoConfig tiny_ppo(long long total) {
  ppo::PpoConfig pc;
  pc.total_steps = total;
  pc.update_interval = 512;
  pc.batch_size = 128;
  pc.epochs_per_update = 2;
  pc.policy_hidden = {16};
  pc.value_hidden = {16};
  return pc;
}

}  // namespace

TEST_CASE("a zero adversary leaves the defended plant untouched") {
  envs::EnvConfig ec;
  ec.max_steps = 200;
  attack::AttackConfig ac;
  const int adv_in = attack::adv_obs_dim(ac.variant, ec);
  defense::DefendedEnv defended(ec, ac, numcore::make_zero_mlp({adv_in, 2}, 2));
  envs::NominalEnv plain(ec);

  std::vector<double> obs_a(static_cast<std::size_t>(defended.obs_dim()));
  std::vector<double> obs_b(static_cast<std::size_t>(plain.obs_dim()));
  defended.reset(13, obs_a);
  plain.reset(13, obs_b);
  CHECK(obs_a == obs_b);

  Rng action_rng(99);
  for (int t = 0; t < 200; ++t) {
    const std::vector<double> a{action_rng.uniform(-1.0, 1.0), action_rng.uniform(-1.0, 1.0)};
    const StepResult ra = defended.step(a, obs_a);
    const StepResult rb = plain.step(a, obs_b);
    REQUIRE(ra.reward == rb.reward);
    REQUIRE(ra.applied[0] == rb.applied[0]);
    REQUIRE(obs_a == obs_b);
  }
}

TEST_CASE("a constant adversary shifts every command") {
  envs::EnvConfig ec;
  attack::AttackConfig ac;
  ac.perturbation_bound = 0.5;
  const int adv_in = attack::adv_obs_dim(ac.variant, ec);
  // Raw delta (10, 0) clamps to (0.5, 0) before the sum.
  defense::DefendedEnv env(ec, ac, constant_adversary(adv_in, 10.0, 0.0));
  std::vector<double> obs(static_cast<std::size_t>(env.obs_dim()));
  env.reset(17, obs);
  const StepResult r = env.step(std::vector<double>{0.2, -0.3}, obs);
  CHECK(r.applied[0] == doctest::Approx(0.7));
  CHECK(r.applied[1] == doctest::Approx(-0.3));
  const StepResult r2 = env.step(std::vector<double>{0.8, 0.0}, obs);
  CHECK(r2.applied[0] == doctest::Approx(1.0));  // 0.8 + 0.5 clamps at the actuator
}

TEST_CASE("defended env rejects a mis-shaped adversary") {
  envs::EnvConfig ec;
  attack::AttackConfig ac;
  const int adv_in = attack::adv_obs_dim(ac.variant, ec);
  CHECK_THROWS_AS(defense::DefendedEnv(ec, ac, numcore::make_zero_mlp({adv_in + 2, 2}, 2)),
                  CheckpointError);
}

TEST_CASE("tandem cadence controls whose turn it is") {
  envs::EnvConfig ec;
  ec.max_steps = 256;
  attack::AttackConfig ac;

  // Huge cadence: the adversary never gets a turn, so its parameters are
  // identical whether we run one buffer fill or two.
  const defense::TandemResult one =
      defense::train_tandem(ec, ac, tiny_ppo(512), /*cadence=*/100, 21);
  const defense::TandemResult two =
      defense::train_tandem(ec, ac, tiny_ppo(1024), /*cadence=*/100, 21);
  CHECK(one.adversary_policy.weights == two.adversary_policy.weights);
  CHECK(one.nominal_policy.weights != two.nominal_policy.weights);

  // Cadence 1 alternates, so the second fill updates the adversary.
  const defense::TandemResult alt =
      defense::train_tandem(ec, ac, tiny_ppo(1024), /*cadence=*/1, 21);
  CHECK(alt.adversary_policy.weights != two.adversary_policy.weights);
}

TEST_CASE("tandem training is deterministic and reports both curves") {
  envs::EnvConfig ec;
  ec.max_steps = 256;
  attack::AttackConfig ac;
  const defense::TandemResult a = defense::train_tandem(ec, ac, tiny_ppo(1024), 1, 31);
  const defense::TandemResult b = defense::train_tandem(ec, ac, tiny_ppo(1024), 1, 31);
  CHECK(a.nominal_policy.weights == b.nominal_policy.weights);
  CHECK(a.adversary_policy.weights == b.adversary_policy.weights);
  REQUIRE(a.nominal_curve.size() == a.adversary_curve.size());
  CHECK(a.nominal_curve.size() == 1024 / 256);
  for (std::size_t i = 0; i < a.nominal_curve.size(); ++i) {
    CHECK(a.nominal_curve[i].step == a.adversary_curve[i].step);
    CHECK(a.nominal_curve[i].episode_return == b.nominal_curve[i].episode_return);
  }
  CHECK(a.adversary_policy.input_dim() == attack::adv_obs_dim(ac.variant, ec));
}

TEST_CASE("tandem validates the cadence") {
  envs::EnvConfig ec;
  attack::AttackConfig ac;
  CHECK_THROWS_AS(defense::train_tandem(ec, ac, tiny_ppo(512), 0, 0), ConfigError);
}

TEST_CASE("training against a fixed adversary is deterministic") {
  envs::EnvConfig ec;
  ec.max_steps = 256;
  attack::AttackConfig ac;
  const int adv_in = attack::adv_obs_dim(ac.variant, ec);
  const ParamSet adversary = constant_adversary(adv_in, 0.4, -0.2);
  const ppo::TrainResult a =
      defense::train_vs_fixed_adversary(ec, ac, tiny_ppo(1024), adversary, 41);
  const ppo::TrainResult b =
      defense::train_vs_fixed_adversary(ec, ac, tiny_ppo(1024), adversary, 41);
  CHECK(a.policy.weights == b.policy.weights);
  CHECK(a.policy.input_dim() == ec.obs_dim());
  CHECK(!a.curve.empty());
}

TEST_CASE("transfer fine-tune warm starts and reports extreme-action rates") {
  envs::EnvConfig ec;
  ec.max_steps = 256;
  attack::AttackConfig ac;

  // A quickly trained nominal pair to warm start from.
  envs::NominalEnv env(ec);
  ppo::Trainer pre(tiny_ppo(1024), env.obs_dim(), env.act_dim(), 51);
  const ppo::TrainResult nominal = ppo::train(pre, env, 51);

  const int adv_in = attack::adv_obs_dim(ac.variant, ec);
  const ParamSet adversary = constant_adversary(adv_in, 0.3, 0.0);

  const defense::FineTuneResult a = defense::train_transfer_finetune(
      ec, ac, tiny_ppo(1024), nominal.policy, nominal.value, adversary, 51);
  const defense::FineTuneResult b = defense::train_transfer_finetune(
      ec, ac, tiny_ppo(1024), nominal.policy, nominal.value, adversary, 51);
  CHECK(a.train.policy.weights == b.train.policy.weights);
  CHECK(a.extreme_before == b.extreme_before);
  CHECK(a.extreme_after == b.extreme_after);
  CHECK(a.extreme_before >= 0.0);
  CHECK(a.train.policy.weights != nominal.policy.weights);  // it did move
  CHECK(a.train.policy.input_dim() == ec.obs_dim());

  // Mis-shaped warm start is rejected.
  const ParamSet bad = numcore::make_zero_mlp({ec.obs_dim() + 1, 8, 2}, 2);
  CHECK_THROWS_AS(defense::train_transfer_finetune(ec, ac, tiny_ppo(512), bad, nominal.value,
                                                   adversary, 0),
                  CheckpointError);
}
