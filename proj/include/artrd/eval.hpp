#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "artrd/attack.hpp"
#include "artrd/envs.hpp"
#include "artrd/numcore.hpp"

namespace artrd::eval {

struct EvalScenario {
  double min_goal_separation = 0.5;
  int episodes = 10;
  int steps_per_episode = 1000;
  bool attack_enabled = false;
  double extreme_threshold = 0.999;
};

struct EpisodeResult {
  int nominal_goals = 0;
  int adversarial_goals = 0;
  int extreme_actions = 0;  // applied-action components at the actuator bound
  double nominal_return = 0.0;
  double adversarial_return = 0.0;
};

// Aggregates are means and sample standard deviations over the stored
// per-episode rows, so they can always be recomputed from the raw data.
struct EvalReport {
  EvalScenario scenario;
  std::uint64_t seed = 0;
  std::vector<EpisodeResult> episodes;
  double nominal_goals_mean = 0.0, nominal_goals_std = 0.0;
  double adversarial_goals_mean = 0.0, adversarial_goals_std = 0.0;
  double extreme_actions_mean = 0.0, extreme_actions_std = 0.0;
  double nominal_return_mean = 0.0;
  double adversarial_return_mean = 0.0;
};

struct EvalSubject {
  const numcore::ParamSet* nominal = nullptr;
  const numcore::ParamSet* adversary = nullptr;  // required when attack is enabled
  attack::AttackConfig attack_cfg;
};

/// Frozen-policy rollouts (distribution means everywhere). Episodes use
/// derived per-episode seeds and may run on worker threads; the report is
/// identical either way.
EvalReport evaluate(const envs::EnvConfig& base_cfg, const EvalScenario& scenario,
                    const EvalSubject& subject, std::uint64_t seed);

/// Components of flattened action rows with |a| >= threshold.
int extreme_action_count(std::span<const double> actions, double threshold = 0.999);

/// Spearman rank correlation over (extreme_count, final adversarial reward)
/// pairs; ties get average ranks. Needs at least 5 pairs. All-tied input on
/// either axis yields 0.
double robustness_correlation(std::span<const std::pair<double, double>> pairs);

/// Mean extreme-action count per clean episode for one policy.
double mean_extreme_actions(const envs::EnvConfig& cfg, const numcore::ParamSet& nominal,
                            int episodes, std::uint64_t seed, double threshold = 0.999);

struct DefenseCell {
  double nominal_goals_mean = 0.0, nominal_goals_std = 0.0;
  double adversarial_goals_mean = 0.0, adversarial_goals_std = 0.0;
};

struct DefenseTable {
  DefenseCell undefended_no_attack, undefended_attack;
  DefenseCell defended_no_attack, defended_attack;
  double adversarial_reduction = 0.0;  // relative drop in under-attack adversarial goals
  double nominal_retention = 0.0;      // defended / undefended nominal goals, no attack
};

/// Pools episodes across matching seed lists into the four-cell comparison.
DefenseTable defense_report(std::span<const EvalReport> undefended_no_attack,
                            std::span<const EvalReport> undefended_attack,
                            std::span<const EvalReport> defended_no_attack,
                            std::span<const EvalReport> defended_attack);

}  // namespace artrd::eval
