#include "artrd/attack.hpp"

#include <algorithm>

namespace artrd::attack {

void AttackConfig::validate() const {
  if (!(perturbation_bound > 0.0)) throw ConfigError("perturbation_bound must be positive");
  if (penalty < 0.0) throw ConfigError("penalty must be non-negative");
}

int adv_obs_dim(AdvVariant variant, const envs::EnvConfig& env_cfg) {
  const int payload = envs::EnvConfig::kActDim + 3;
  return variant == AdvVariant::StateAware ? env_cfg.obs_dim() + payload : payload;
}

void make_adv_observation(AdvVariant variant, std::span<const double> nominal_obs,
                          std::span<const double> nominal_action,
                          const std::array<double, 3>& goal_features,
                          std::span<double> out) {
  std::size_t k = 0;
  if (variant == AdvVariant::StateAware) {
    if (out.size() != nominal_obs.size() + nominal_action.size() + 3)
      throw ContractError("adversary observation buffer size mismatch");
    std::copy(nominal_obs.begin(), nominal_obs.end(), out.begin());
    k = nominal_obs.size();
  } else if (out.size() != nominal_action.size() + 3) {
    throw ContractError("adversary observation buffer size mismatch");
  }
  std::copy(nominal_action.begin(), nominal_action.end(), out.begin() + k);
  k += nominal_action.size();
  std::copy(goal_features.begin(), goal_features.end(), out.begin() + k);
}

double adv_reward(double dist_prev, double dist_now, bool at_adversarial_goal,
                  bool at_nominal_goal, const AttackConfig& cfg) {
  if (at_adversarial_goal) return cfg.goal_bonus;
  return (dist_prev - dist_now) - (at_nominal_goal ? cfg.penalty : 0.0);
}

AdvEnv::AdvEnv(const envs::EnvConfig& env_cfg, const AttackConfig& attack_cfg,
               numcore::ParamSet frozen_nominal)
    : env_cfg_(env_cfg), attack_cfg_(attack_cfg), nominal_(std::move(frozen_nominal)) {
  env_cfg_.validate();
  attack_cfg_.validate();
  if (nominal_.input_dim() != env_cfg_.obs_dim() ||
      nominal_.output_dim() != envs::EnvConfig::kActDim)
    throw CheckpointError("nominal policy does not fit this environment");
  nominal_obs_.resize(static_cast<std::size_t>(env_cfg_.obs_dim()));
  nominal_action_.resize(static_cast<std::size_t>(envs::EnvConfig::kActDim));
}

void AdvEnv::refresh_victim(std::span<double> obs_out) {
  envs::build_observation(state_, env_cfg_, nominal_obs_);
  mlp_forward(nominal_, nominal_obs_, nominal_action_, scratch_);
  make_adv_observation(attack_cfg_.variant, nominal_obs_, nominal_action_,
                       envs::adversarial_goal_features(state_, env_cfg_), obs_out);
}

void AdvEnv::reset(std::uint64_t seed, std::span<double> obs_out) {
  state_ = envs::env_reset(env_cfg_, seed);
  refresh_victim(obs_out);
}

StepResult AdvEnv::step(std::span<const double> perturbation, std::span<double> obs_out) {
  if (perturbation.size() != nominal_action_.size())
    throw ContractError("perturbation size mismatch");

  StepResult res;
  for (std::size_t i = 0; i < nominal_action_.size(); ++i)
    res.applied[i] = clamp_unit(nominal_action_[i] +
                                clamp_to(perturbation[i], attack_cfg_.perturbation_bound));

  const double dist_prev = (state_.position - state_.adversarial_goal).norm();
  envs::step_dynamics(state_, env_cfg_, res.applied);
  const double dist_now = (state_.position - state_.adversarial_goal).norm();

  res.reached_nominal_goal = envs::at_nominal_goal(state_, env_cfg_);
  res.reached_adversarial_goal = envs::at_adversarial_goal(state_, env_cfg_);
  res.reward = adv_reward(dist_prev, dist_now, res.reached_adversarial_goal,
                          res.reached_nominal_goal, attack_cfg_);
  if (res.reached_nominal_goal || res.reached_adversarial_goal)
    envs::regenerate_goals(state_, env_cfg_);

  refresh_victim(obs_out);
  return res;
}

ppo::TrainResult train_adversary(const envs::EnvConfig& env_cfg, const AttackConfig& attack_cfg,
                                 const ppo::PpoConfig& ppo_cfg,
                                 const numcore::ParamSet& frozen_nominal, std::uint64_t seed,
                                 const ppo::CheckpointSink& checkpoint_sink) {
  AdvEnv env(env_cfg, attack_cfg, frozen_nominal);
  ppo::Trainer trainer(ppo_cfg, env.obs_dim(), env.act_dim(), seed);
  return ppo::train(trainer, env, seed, checkpoint_sink);
}

}  // namespace artrd::attack
