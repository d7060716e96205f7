#include <doctest.h>

#include <cmath>

#include "artrd/eval.hpp"
#include "oracles.hpp"

using namespace artrd;
using numcore::ParamSet;

namespace {

ParamSet constant_policy(int obs_dim, double a0, double a1) {
  ParamSet p = numcore::make_zero_mlp({obs_dim, 2}, 2);
  p.weights[static_cast<std::size_t>(obs_dim) * 2 + 0] = a0;
  p.weights[static_cast<std::size_t>(obs_dim) * 2 + 1] = a1;
  return p;
}

}  // namespace

TEST_CASE("a motionless policy scores exactly zero") {
  envs::EnvConfig cfg;
  const ParamSet still = numcore::make_zero_mlp({cfg.obs_dim(), 2}, 2);
  eval::EvalScenario scenario;
  scenario.episodes = 4;
  scenario.steps_per_episode = 50;
  eval::EvalSubject subject;
  subject.nominal = &still;
  const eval::EvalReport rep = eval::evaluate(cfg, scenario, subject, 0);
  REQUIRE(rep.episodes.size() == 4);
  for (const auto& ep : rep.episodes) {
    CHECK(ep.nominal_goals == 0);
    CHECK(ep.adversarial_goals == 0);
    CHECK(ep.extreme_actions == 0);
    CHECK(ep.nominal_return == doctest::Approx(0.0));
    CHECK(ep.adversarial_return == doctest::Approx(0.0));
  }
  CHECK(rep.nominal_goals_mean == 0.0);
  CHECK(rep.nominal_goals_std == 0.0);
}

TEST_CASE("saturated commands count as extreme on every component") {
  envs::EnvConfig cfg;
  const ParamSet loud = constant_policy(cfg.obs_dim(), 10.0, -10.0);
  eval::EvalScenario scenario;
  scenario.episodes = 2;
  scenario.steps_per_episode = 50;
  eval::EvalSubject subject;
  subject.nominal = &loud;
  const eval::EvalReport rep = eval::evaluate(cfg, scenario, subject, 1);
  for (const auto& ep : rep.episodes) CHECK(ep.extreme_actions == 2 * 50);
  CHECK(rep.extreme_actions_mean == doctest::Approx(100.0));
}

TEST_CASE("extreme counting thresholds on absolute value") {
  const std::vector<double> actions{1.0, -1.0, 0.9995, -0.9, 0.2, -0.9991};
  CHECK(eval::extreme_action_count(actions, 0.999) == 4);
  CHECK(eval::extreme_action_count(actions, 0.9996) == 2);
}

TEST_CASE("evaluation is deterministic and seed-sensitive") {
  envs::EnvConfig cfg;
  const ParamSet p = constant_policy(cfg.obs_dim(), 0.8, 0.3);
  eval::EvalScenario scenario;
  scenario.episodes = 3;
  scenario.steps_per_episode = 120;
  eval::EvalSubject subject;
  subject.nominal = &p;
  const eval::EvalReport a = eval::evaluate(cfg, scenario, subject, 7);
  const eval::EvalReport b = eval::evaluate(cfg, scenario, subject, 7);
  const eval::EvalReport c = eval::evaluate(cfg, scenario, subject, 8);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].nominal_return == b.episodes[i].nominal_return);
    CHECK(a.episodes[i].nominal_goals == b.episodes[i].nominal_goals);
  }
  bool any_diff = false;
  for (std::size_t i = 0; i < a.episodes.size(); ++i)
    any_diff = any_diff || a.episodes[i].nominal_return != c.episodes[i].nominal_return;
  CHECK(any_diff);
}

TEST_CASE("the scenario separation overrides the base config") {
  envs::EnvConfig cfg;
  cfg.min_goal_separation = 0.1;
  const ParamSet p = constant_policy(cfg.obs_dim(), 0.8, 0.3);
  eval::EvalSubject subject;
  subject.nominal = &p;
  eval::EvalScenario near;
  near.min_goal_separation = 0.1;
  near.episodes = 3;
  near.steps_per_episode = 100;
  eval::EvalScenario far = near;
  far.min_goal_separation = 4.0;
  const eval::EvalReport rn = eval::evaluate(cfg, near, subject, 3);
  const eval::EvalReport rf = eval::evaluate(cfg, far, subject, 3);
  bool differs = false;
  for (std::size_t i = 0; i < rn.episodes.size(); ++i)
    differs = differs || rn.episodes[i].nominal_return != rf.episodes[i].nominal_return;
  CHECK(differs);

  eval::EvalScenario impossible = near;
  impossible.min_goal_separation = 2.0 * cfg.arena_diagonal();
  CHECK_THROWS_AS(eval::evaluate(cfg, impossible, subject, 3), ConfigError);
}

TEST_CASE("attack wiring requires an adversary") {
  envs::EnvConfig cfg;
  const ParamSet p = constant_policy(cfg.obs_dim(), 0.5, 0.0);
  eval::EvalScenario scenario;
  scenario.attack_enabled = true;
  scenario.episodes = 2;
  scenario.steps_per_episode = 20;
  eval::EvalSubject subject;
  subject.nominal = &p;
  CHECK_THROWS_AS(eval::evaluate(cfg, scenario, subject, 0), ContractError);
}

TEST_CASE("a zero adversary changes nothing about the rollout") {
  envs::EnvConfig cfg;
  const ParamSet p = constant_policy(cfg.obs_dim(), 0.7, 0.2);
  const ParamSet zero_adv =
      numcore::make_zero_mlp({attack::adv_obs_dim(attack::AdvVariant::StateUnaware, cfg), 2}, 2);
  eval::EvalScenario off;
  off.episodes = 3;
  off.steps_per_episode = 150;
  eval::EvalScenario on = off;
  on.attack_enabled = true;

  eval::EvalSubject clean;
  clean.nominal = &p;
  eval::EvalSubject attacked = clean;
  attacked.adversary = &zero_adv;

  const eval::EvalReport a = eval::evaluate(cfg, off, clean, 5);
  const eval::EvalReport b = eval::evaluate(cfg, on, attacked, 5);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].nominal_return == b.episodes[i].nominal_return);
    CHECK(a.episodes[i].adversarial_return == b.episodes[i].adversarial_return);
    CHECK(a.episodes[i].nominal_goals == b.episodes[i].nominal_goals);
    CHECK(a.episodes[i].extreme_actions == b.episodes[i].extreme_actions);
  }
}

TEST_CASE("a saturating adversary alters the victim trajectory") {
  envs::EnvConfig cfg;
  const ParamSet p = constant_policy(cfg.obs_dim(), 0.7, 0.2);
  // The adversary payload starts with the victim action; steer hard against it.
  ParamSet adv = numcore::make_zero_mlp({5, 2}, 2);
  adv.weights[5 * 2 + 0] = -5.0;  // bias: cancel forward drive entirely
  eval::EvalScenario on;
  on.attack_enabled = true;
  on.episodes = 3;
  on.steps_per_episode = 150;
  eval::EvalSubject attacked;
  attacked.nominal = &p;
  attacked.adversary = &adv;
  const eval::EvalReport rep = eval::evaluate(cfg, on, attacked, 5);

  eval::EvalScenario off = on;
  off.attack_enabled = false;
  eval::EvalSubject clean;
  clean.nominal = &p;
  const eval::EvalReport base = eval::evaluate(cfg, off, clean, 5);
  // Forward drive is cut from 0.7 to 0.2 on every step, so the rollouts
  // separate immediately. Whether the return goes up or down depends on the
  // victim's (aimless) trajectory, so only divergence is asserted.
  REQUIRE(rep.episodes.size() == base.episodes.size());
  bool any_differ = false;
  for (std::size_t i = 0; i < rep.episodes.size(); ++i)
    any_differ = any_differ || rep.episodes[i].nominal_return != base.episodes[i].nominal_return;
  CHECK(any_differ);
}

TEST_CASE("rank correlation handles monotone data and ties") {
  std::vector<std::pair<double, double>> up;
  std::vector<std::pair<double, double>> down;
  for (int i = 0; i < 8; ++i) {
    up.emplace_back(i, 2.0 * i + 1.0);
    down.emplace_back(i, -3.0 * i);
  }
  CHECK(eval::robustness_correlation(up) == doctest::Approx(1.0));
  CHECK(eval::robustness_correlation(down) == doctest::Approx(-1.0));

  Rng rng(17);
  std::vector<std::pair<double, double>> noisy;
  for (int i = 0; i < 40; ++i) {
    // Deliberate duplicates on both axes to exercise average ranks.
    const double x = static_cast<double>(rng.below(6));
    const double y = static_cast<double>(rng.below(4)) - 0.5 * x;
    noisy.emplace_back(x, y);
  }
  CHECK(eval::robustness_correlation(noisy) ==
        doctest::Approx(oracle::spearman_naive(noisy)).epsilon(1e-12));

  std::vector<std::pair<double, double>> constant;
  for (int i = 0; i < 6; ++i) constant.emplace_back(1.0, i);
  CHECK(eval::robustness_correlation(constant) == 0.0);

  std::vector<std::pair<double, double>> tiny{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  CHECK_THROWS_AS(eval::robustness_correlation(tiny), ContractError);
}

TEST_CASE("mean extreme actions agrees with a direct evaluation") {
  envs::EnvConfig cfg;
  const ParamSet loud = constant_policy(cfg.obs_dim(), 5.0, 0.0);
  const double direct = eval::mean_extreme_actions(cfg, loud, 4, 9);
  eval::EvalScenario scenario;
  scenario.episodes = 4;
  scenario.steps_per_episode = 1000;
  eval::EvalSubject subject;
  subject.nominal = &loud;
  const eval::EvalReport rep = eval::evaluate(cfg, scenario, subject, 9);
  CHECK(direct == doctest::Approx(rep.extreme_actions_mean));
  CHECK(direct == doctest::Approx(1000.0));  // one saturated component per step
}

TEST_CASE("the defense table pools episodes and derives the headline ratios") {
  auto report = [](std::uint64_t seed, std::vector<std::pair<int, int>> goals) {
    eval::EvalReport r;
    r.seed = seed;
    for (auto [nom, adv] : goals) {
      eval::EpisodeResult ep;
      ep.nominal_goals = nom;
      ep.adversarial_goals = adv;
      r.episodes.push_back(ep);
    }
    return r;
  };
  const std::vector<eval::EvalReport> u_clean{report(0, {{8, 0}, {6, 0}}),
                                              report(1, {{7, 1}, {7, 1}})};
  const std::vector<eval::EvalReport> u_attack{report(0, {{2, 4}, {2, 4}}),
                                               report(1, {{3, 4}, {1, 4}})};
  const std::vector<eval::EvalReport> d_clean{report(0, {{6, 0}, {6, 0}}),
                                              report(1, {{5, 1}, {7, 1}})};
  const std::vector<eval::EvalReport> d_attack{report(0, {{5, 1}, {5, 1}}),
                                               report(1, {{5, 1}, {5, 1}})};
  const eval::DefenseTable t = eval::defense_report(u_clean, u_attack, d_clean, d_attack);
  CHECK(t.undefended_no_attack.nominal_goals_mean == doctest::Approx(7.0));
  CHECK(t.undefended_attack.adversarial_goals_mean == doctest::Approx(4.0));
  CHECK(t.defended_attack.adversarial_goals_mean == doctest::Approx(1.0));
  CHECK(t.adversarial_reduction == doctest::Approx((4.0 - 1.0) / 4.0));
  CHECK(t.nominal_retention == doctest::Approx(6.0 / 7.0));

  const std::vector<eval::EvalReport> wrong_seed{report(0, {{1, 1}}), report(2, {{1, 1}})};
  CHECK_THROWS_AS(eval::defense_report(u_clean, u_attack, d_clean, wrong_seed), ContractError);
}
