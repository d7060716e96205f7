#pragma once

#include <vector>

#include "artrd/attack.hpp"
#include "artrd/envs.hpp"
#include "artrd/numcore.hpp"
#include "artrd/ppo.hpp"
#include "artrd/rollout_env.hpp"

namespace artrd::defense {

enum class Scheme { TandemFromScratch, FixedAdvFromScratch, TransferFineTune };

// Plant plus a frozen attacker injecting mean perturbations into every
// command. The policy under training sees the plain nominal observation.
class DefendedEnv final : public RolloutEnv {
 public:
  DefendedEnv(const envs::EnvConfig& env_cfg, const attack::AttackConfig& attack_cfg,
              numcore::ParamSet frozen_adversary);

  int obs_dim() const override { return env_cfg_.obs_dim(); }
  int act_dim() const override { return envs::EnvConfig::kActDim; }
  int episode_length() const override { return env_cfg_.max_steps; }
  void reset(std::uint64_t seed, std::span<double> obs_out) override;
  StepResult step(std::span<const double> action, std::span<double> obs_out) override;

  const envs::EnvState& state() const { return state_; }

 private:
  envs::EnvConfig env_cfg_;
  attack::AttackConfig attack_cfg_;
  numcore::ParamSet adversary_;
  envs::EnvState state_;
  std::vector<double> obs_, adv_obs_, delta_;
  numcore::MlpScratch scratch_;
};

struct TandemResult {
  numcore::ParamSet nominal_policy, nominal_value;
  numcore::ParamSet adversary_policy, adversary_value;
  std::vector<ppo::CurvePoint> nominal_curve;    // episode returns under nominal reward
  std::vector<ppo::CurvePoint> adversary_curve;  // same episodes, adversarial reward
};

/// Both policies learn from one shared rollout; PPO updates alternate between
/// them every `cadence` buffer fills, nominal first. The policy whose turn it
/// is not discards its rollout (its data would be stale after the update).
TandemResult train_tandem(const envs::EnvConfig& env_cfg, const attack::AttackConfig& attack_cfg,
                          const ppo::PpoConfig& ppo_cfg, int cadence, std::uint64_t seed);

/// Fresh nominal policy trained inside DefendedEnv; the adversary is fixed.
ppo::TrainResult train_vs_fixed_adversary(const envs::EnvConfig& env_cfg,
                                          const attack::AttackConfig& attack_cfg,
                                          const ppo::PpoConfig& ppo_cfg,
                                          const numcore::ParamSet& frozen_adversary,
                                          std::uint64_t seed,
                                          const ppo::CheckpointSink& checkpoint_sink = nullptr);

struct FineTuneResult {
  ppo::TrainResult train;
  // Mean extreme-action count per clean episode, before and after fine-tuning.
  double extreme_before = 0.0;
  double extreme_after = 0.0;
};

/// Same loop as train_vs_fixed_adversary but warm-started from a trained
/// nominal policy (optimizer state starts fresh; the checkpoint format does
/// not carry it).
FineTuneResult train_transfer_finetune(const envs::EnvConfig& env_cfg,
                                       const attack::AttackConfig& attack_cfg,
                                       const ppo::PpoConfig& ppo_cfg,
                                       numcore::ParamSet nominal_policy,
                                       numcore::ParamSet nominal_value,
                                       const numcore::ParamSet& frozen_adversary,
                                       std::uint64_t seed,
                                       const ppo::CheckpointSink& checkpoint_sink = nullptr);

}  // namespace artrd::defense
