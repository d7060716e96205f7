#include "artrd/defense.hpp"

#include <algorithm>

#include "artrd/eval.hpp"

namespace artrd::defense {

DefendedEnv::DefendedEnv(const envs::EnvConfig& env_cfg, const attack::AttackConfig& attack_cfg,
                         numcore::ParamSet frozen_adversary)
    : env_cfg_(env_cfg), attack_cfg_(attack_cfg), adversary_(std::move(frozen_adversary)) {
  env_cfg_.validate();
  attack_cfg_.validate();
  if (adversary_.input_dim() != attack::adv_obs_dim(attack_cfg_.variant, env_cfg_) ||
      adversary_.output_dim() != envs::EnvConfig::kActDim)
    throw CheckpointError("adversary policy does not fit this environment");
  obs_.resize(static_cast<std::size_t>(env_cfg_.obs_dim()));
  adv_obs_.resize(static_cast<std::size_t>(adversary_.input_dim()));
  delta_.resize(static_cast<std::size_t>(envs::EnvConfig::kActDim));
}

void DefendedEnv::reset(std::uint64_t seed, std::span<double> obs_out) {
  state_ = envs::env_reset(env_cfg_, seed);
  envs::build_observation(state_, env_cfg_, obs_);
  std::copy(obs_.begin(), obs_.end(), obs_out.begin());
}

StepResult DefendedEnv::step(std::span<const double> action, std::span<double> obs_out) {
  if (action.size() != delta_.size()) throw ContractError("action size mismatch");

  attack::make_adv_observation(attack_cfg_.variant, obs_, action,
                               envs::adversarial_goal_features(state_, env_cfg_), adv_obs_);
  mlp_forward(adversary_, adv_obs_, delta_, scratch_);

  StepResult res;
  for (std::size_t i = 0; i < delta_.size(); ++i)
    res.applied[i] =
        clamp_unit(action[i] + clamp_to(delta_[i], attack_cfg_.perturbation_bound));

  const envs::EnvState prev = state_;
  envs::step_dynamics(state_, env_cfg_, res.applied);
  res.reward = envs::nominal_reward(prev, state_, env_cfg_);
  res.reached_nominal_goal = envs::at_nominal_goal(state_, env_cfg_);
  res.reached_adversarial_goal = envs::at_adversarial_goal(state_, env_cfg_);
  if (res.reached_nominal_goal || res.reached_adversarial_goal)
    envs::regenerate_goals(state_, env_cfg_);

  envs::build_observation(state_, env_cfg_, obs_);
  std::copy(obs_.begin(), obs_.end(), obs_out.begin());
  return res;
}

TandemResult train_tandem(const envs::EnvConfig& env_cfg, const attack::AttackConfig& attack_cfg,
                          const ppo::PpoConfig& ppo_cfg, int cadence, std::uint64_t seed) {
  env_cfg.validate();
  attack_cfg.validate();
  ppo_cfg.validate();
  if (cadence <= 0) throw ConfigError("tandem cadence must be positive");

  const int obs_dim = env_cfg.obs_dim();
  const int act_dim = envs::EnvConfig::kActDim;
  const int adv_dim = attack::adv_obs_dim(attack_cfg.variant, env_cfg);

  ppo::Trainer nominal(ppo_cfg, obs_dim, act_dim, seed);
  ppo::Trainer adversary(ppo_cfg, adv_dim, act_dim, splitmix64(seed ^ 0xadull));

  TandemResult out;
  const long long total = ppo_cfg.total_steps;
  const int ep_len = env_cfg.max_steps;

  std::vector<double> obs(static_cast<std::size_t>(obs_dim));
  std::vector<double> next_obs(obs.size());
  std::vector<double> adv_obs(static_cast<std::size_t>(adv_dim));
  std::vector<double> preview(static_cast<std::size_t>(act_dim));
  numcore::MlpScratch scratch;

  long long steps = 0, episode = 0, fills = 0;
  envs::EnvState state;
  if (total > 0) {
    state = envs::env_reset(env_cfg, ppo::episode_seed(seed, episode));
    envs::build_observation(state, env_cfg, obs);
  }
  double ep_nom_return = 0.0, ep_adv_return = 0.0;
  int ep_nominal = 0, ep_adversarial = 0, ep_step = 0;

  while (steps < total) {
    const numcore::GaussianAction act = nominal.act(obs);
    const double v_nom = nominal.value_of(obs);
    attack::make_adv_observation(attack_cfg.variant, obs, act.sample,
                                 envs::adversarial_goal_features(state, env_cfg), adv_obs);
    const numcore::GaussianAction delta = adversary.act(adv_obs);
    const double v_adv = adversary.value_of(adv_obs);

    std::array<double, 2> applied{};
    for (int i = 0; i < act_dim; ++i)
      applied[static_cast<std::size_t>(i)] =
          clamp_unit(act.sample[static_cast<std::size_t>(i)] +
                     clamp_to(delta.sample[static_cast<std::size_t>(i)],
                              attack_cfg.perturbation_bound));

    const envs::EnvState prev = state;
    const double d_adv_prev = (state.position - state.adversarial_goal).norm();
    envs::step_dynamics(state, env_cfg, applied);
    const double d_adv_now = (state.position - state.adversarial_goal).norm();
    const double r_nom = envs::nominal_reward(prev, state, env_cfg);
    const bool at_nom = envs::at_nominal_goal(state, env_cfg);
    const bool at_adv = envs::at_adversarial_goal(state, env_cfg);
    const double r_adv = attack::adv_reward(d_adv_prev, d_adv_now, at_adv, at_nom, attack_cfg);
    if (at_nom || at_adv) envs::regenerate_goals(state, env_cfg);
    envs::build_observation(state, env_cfg, next_obs);

    ++ep_step;
    ++steps;
    const bool done = ep_step == ep_len;
    nominal.record(obs, act.sample, act.log_prob, r_nom, v_nom, done);
    adversary.record(adv_obs, delta.sample, delta.log_prob, r_adv, v_adv, done);
    ep_nom_return += r_nom;
    ep_adv_return += r_adv;
    ep_nominal += at_nom ? 1 : 0;
    ep_adversarial += at_adv ? 1 : 0;

    if (nominal.buffer_full()) {
      // Bootstrap the adversary's value with the victim's mean action at the
      // next state; the actual next action is sampled only after the update.
      mlp_forward(nominal.policy(), next_obs, preview, scratch);
      attack::make_adv_observation(attack_cfg.variant, next_obs, preview,
                                   envs::adversarial_goal_features(state, env_cfg), adv_obs);
      const double adv_boot = adversary.value_of(adv_obs);
      const double nom_boot = nominal.value_of(next_obs);
      const bool nominal_turn = (fills / cadence) % 2 == 0;
      if (nominal_turn) {
        nominal.update(nom_boot);
        adversary.discard_buffer();
      } else {
        adversary.update(adv_boot);
        nominal.discard_buffer();
      }
      ++fills;
    }

    std::swap(obs, next_obs);
    if (done) {
      out.nominal_curve.push_back({steps, ep_nom_return, ep_nominal, ep_adversarial});
      out.adversary_curve.push_back({steps, ep_adv_return, ep_nominal, ep_adversarial});
      ++episode;
      state = envs::env_reset(env_cfg, ppo::episode_seed(seed, episode));
      envs::build_observation(state, env_cfg, obs);
      ep_nom_return = ep_adv_return = 0.0;
      ep_nominal = ep_adversarial = 0;
      ep_step = 0;
    }
  }

  out.nominal_policy = nominal.policy();
  out.nominal_value = nominal.value();
  out.adversary_policy = adversary.policy();
  out.adversary_value = adversary.value();
  return out;
}

ppo::TrainResult train_vs_fixed_adversary(const envs::EnvConfig& env_cfg,
                                          const attack::AttackConfig& attack_cfg,
                                          const ppo::PpoConfig& ppo_cfg,
                                          const numcore::ParamSet& frozen_adversary,
                                          std::uint64_t seed,
                                          const ppo::CheckpointSink& checkpoint_sink) {
  DefendedEnv env(env_cfg, attack_cfg, frozen_adversary);
  ppo::Trainer trainer(ppo_cfg, env.obs_dim(), env.act_dim(), seed);
  return ppo::train(trainer, env, seed, checkpoint_sink);
}

FineTuneResult train_transfer_finetune(const envs::EnvConfig& env_cfg,
                                       const attack::AttackConfig& attack_cfg,
                                       const ppo::PpoConfig& ppo_cfg,
                                       numcore::ParamSet nominal_policy,
                                       numcore::ParamSet nominal_value,
                                       const numcore::ParamSet& frozen_adversary,
                                       std::uint64_t seed,
                                       const ppo::CheckpointSink& checkpoint_sink) {
  FineTuneResult out;
  out.extreme_before = eval::mean_extreme_actions(env_cfg, nominal_policy, 10, seed);

  DefendedEnv env(env_cfg, attack_cfg, frozen_adversary);
  ppo::Trainer trainer(ppo_cfg, std::move(nominal_policy), std::move(nominal_value), seed);
  if (trainer.policy().input_dim() != env.obs_dim())
    throw CheckpointError("nominal policy does not fit this environment");
  out.train = ppo::train(trainer, env, seed, checkpoint_sink);

  out.extreme_after = eval::mean_extreme_actions(env_cfg, out.train.policy, 10, seed);
  return out;
}

}  // namespace artrd::defense
