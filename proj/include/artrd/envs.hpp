#pragma once

#include <array>
#include <numbers>
#include <span>

#include "artrd/common.hpp"
#include "artrd/rollout_env.hpp"

namespace artrd::envs {

enum class Kind { Point, Car };

struct EnvConfig {
  Kind kind = Kind::Point;
  double arena_half_width = 3.0;
  double goal_radius = 0.3;
  double min_goal_separation = 0.5;
  double dt = 0.1;
  int max_steps = 1000;
  int lidar_bins = 8;

  double thrust_gain = 1.0;  // Point: forward command scale
  double turn_gain = 2.5;    // Point: turn command scale
  double drag = 0.05;
  double wheel_gain = 1.0;  // Car: wheel command scale
  double wheel_base = 0.4;  // Car: distance between wheels

  static constexpr int kActDim = 2;

  // velocity (body frame, 2) + angular rate + goal compass (2) + goal
  // distance + lidar bins
  int obs_dim() const { return 6 + lidar_bins; }
  double arena_diagonal() const { return 2.0 * arena_half_width * std::numbers::sqrt2; }
  void validate() const;
};

struct EnvState {
  Vec2 position{0.0, 0.0};
  double heading = 0.0;  // radians, kept in (-pi, pi]
  double linear_velocity = 0.0;
  double angular_velocity = 0.0;
  Vec2 nominal_goal{0.0, 0.0};
  Vec2 adversarial_goal{0.0, 0.0};
  int step = 0;
  Rng rng;
};

/// Agent at the arena center, heading uniform, fresh goal pair.
EnvState env_reset(const EnvConfig& cfg, std::uint64_t seed);

/// Resample both goals: uniform in the arena, at least min_goal_separation
/// apart and at least 2*goal_radius from the agent's current position.
/// Gives up after 10,000 tries (separation infeasible for this arena).
void regenerate_goals(EnvState& state, const EnvConfig& cfg);

std::array<double, 2> clamp_action(std::span<const double> action);

/// One dt of dynamics with an already-clamped command; advances step and
/// clamps position to the arena box. Goals untouched.
void step_dynamics(EnvState& state, const EnvConfig& cfg, const std::array<double, 2>& action);

bool at_nominal_goal(const EnvState& state, const EnvConfig& cfg);
bool at_adversarial_goal(const EnvState& state, const EnvConfig& cfg);

/// Distance shrinkage toward the nominal goal plus a bonus of 1 on arrival.
/// Both states must refer to the same goal pair.
double nominal_reward(const EnvState& prev, const EnvState& now, const EnvConfig& cfg);

void build_observation(const EnvState& state, const EnvConfig& cfg, std::span<double> out);

/// Adversarial-goal features in the agent frame: unit compass (2) + distance.
std::array<double, 3> adversarial_goal_features(const EnvState& state, const EnvConfig& cfg);

// Step-sequenced environment over the free functions above. Reaching either
// goal regenerates the pair in place; the episode itself runs to max_steps.
class NominalEnv final : public RolloutEnv {
 public:
  explicit NominalEnv(const EnvConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  int obs_dim() const override { return cfg_.obs_dim(); }
  int act_dim() const override { return EnvConfig::kActDim; }
  int episode_length() const override { return cfg_.max_steps; }
  void reset(std::uint64_t seed, std::span<double> obs_out) override;
  StepResult step(std::span<const double> action, std::span<double> obs_out) override;

  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }

 private:
  EnvConfig cfg_;
  EnvState state_;
};

}  // namespace artrd::envs
