#pragma once

#include <array>
#include <span>
#include <vector>

#include "artrd/envs.hpp"
#include "artrd/numcore.hpp"
#include "artrd/ppo.hpp"
#include "artrd/rollout_env.hpp"

namespace artrd::attack {

enum class AdvVariant { StateAware, StateUnaware };

struct AttackConfig {
  AdvVariant variant = AdvVariant::StateUnaware;
  double perturbation_bound = 1.0;  // per-component clamp on the raw perturbation
  double penalty = 1.0;             // subtracted while the agent sits at the nominal goal
  double goal_bonus = 1.0;          // reward when the adversarial goal is reached

  void validate() const;
};

/// Adversary observation length: victim action + goal compass + goal distance,
/// preceded by the victim's own observation in the StateAware variant.
int adv_obs_dim(AdvVariant variant, const envs::EnvConfig& env_cfg);

/// Payload order: [victim observation (StateAware only)] ++ victim action ++
/// adversarial-goal compass ++ adversarial-goal distance.
void make_adv_observation(AdvVariant variant, std::span<const double> nominal_obs,
                          std::span<const double> nominal_action,
                          const std::array<double, 3>& goal_features,
                          std::span<double> out);

/// Progress toward the adversarial goal, with a penalty while parked on the
/// nominal goal; arrival at the adversarial goal pays the flat bonus instead.
double adv_reward(double dist_prev, double dist_now, bool at_adversarial_goal,
                  bool at_nominal_goal, const AttackConfig& cfg = {});

// The attacker's MDP: wraps the plant plus a frozen victim policy. The action
// is a perturbation added to the victim's command; the victim always acts via
// its distribution mean and is never mutated. The victim's parameters are not
// reachable through this interface.
class AdvEnv final : public RolloutEnv {
 public:
  AdvEnv(const envs::EnvConfig& env_cfg, const AttackConfig& attack_cfg,
         numcore::ParamSet frozen_nominal);

  int obs_dim() const override { return adv_obs_dim(attack_cfg_.variant, env_cfg_); }
  int act_dim() const override { return envs::EnvConfig::kActDim; }
  int episode_length() const override { return env_cfg_.max_steps; }
  void reset(std::uint64_t seed, std::span<double> obs_out) override;
  StepResult step(std::span<const double> perturbation, std::span<double> obs_out) override;

  const envs::EnvState& state() const { return state_; }
  std::span<const double> nominal_observation() const { return nominal_obs_; }
  std::span<const double> nominal_action() const { return nominal_action_; }

 private:
  void refresh_victim(std::span<double> obs_out);

  envs::EnvConfig env_cfg_;
  AttackConfig attack_cfg_;
  numcore::ParamSet nominal_;
  envs::EnvState state_;
  std::vector<double> nominal_obs_;
  std::vector<double> nominal_action_;
  numcore::MlpScratch scratch_;
};

/// PPO on the wrapper; returns the trained adversary. The frozen victim inside
/// the wrapper is untouched by construction.
ppo::TrainResult train_adversary(const envs::EnvConfig& env_cfg, const AttackConfig& attack_cfg,
                                 const ppo::PpoConfig& ppo_cfg,
                                 const numcore::ParamSet& frozen_nominal, std::uint64_t seed,
                                 const ppo::CheckpointSink& checkpoint_sink = nullptr);

}  // namespace artrd::attack
