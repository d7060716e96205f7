#include "artrd/envs.hpp"

#include <cmath>

namespace artrd::envs {

void EnvConfig::validate() const {
  if (arena_half_width <= 0.0) throw ConfigError("arena_half_width must be positive");
  if (goal_radius <= 0.0) throw ConfigError("goal_radius must be positive");
  if (dt <= 0.0) throw ConfigError("dt must be positive");
  if (max_steps <= 0) throw ConfigError("max_steps must be positive");
  if (lidar_bins <= 0) throw ConfigError("lidar_bins must be positive");
  if (min_goal_separation < 0.0) throw ConfigError("min_goal_separation must be non-negative");
  if (min_goal_separation >= arena_diagonal())
    throw ConfigError("min_goal_separation exceeds the arena diameter");
  if (drag < 0.0 || drag >= 1.0) throw ConfigError("drag must lie in [0, 1)");
  if (kind == Kind::Car && wheel_base <= 0.0) throw ConfigError("wheel_base must be positive");
}

void regenerate_goals(EnvState& state, const EnvConfig& cfg) {
  const double w = cfg.arena_half_width;
  const double keep_out = 2.0 * cfg.goal_radius;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vec2 nom{state.rng.uniform(-w, w), state.rng.uniform(-w, w)};
    Vec2 adv{state.rng.uniform(-w, w), state.rng.uniform(-w, w)};
    if ((nom - adv).norm() < cfg.min_goal_separation) continue;
    if ((nom - state.position).norm() < keep_out) continue;
    if ((adv - state.position).norm() < keep_out) continue;
    state.nominal_goal = nom;
    state.adversarial_goal = adv;
    return;
  }
  throw ConfigError("goal sampling failed; min_goal_separation too large for this arena");
}

EnvState env_reset(const EnvConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  EnvState state;
  state.rng = Rng::derive(seed, 0x0e);
  state.position = {0.0, 0.0};
  state.heading = normalize_angle(state.rng.uniform(-kPi, kPi));
  state.linear_velocity = 0.0;
  state.angular_velocity = 0.0;
  state.step = 0;
  regenerate_goals(state, cfg);
  return state;
}

std::array<double, 2> clamp_action(std::span<const double> action) {
  if (action.size() != 2) throw ContractError("environment actions have two components");
  return {clamp_unit(action[0]), clamp_unit(action[1])};
}

void step_dynamics(EnvState& state, const EnvConfig& cfg, const std::array<double, 2>& action) {
  if (cfg.kind == Kind::Point) {
    state.angular_velocity = cfg.turn_gain * action[1];
    state.heading = normalize_angle(state.heading + state.angular_velocity * cfg.dt);
    state.linear_velocity =
        (1.0 - cfg.drag) * state.linear_velocity + cfg.thrust_gain * action[0] * cfg.dt;
  } else {
    state.angular_velocity = cfg.wheel_gain * (action[1] - action[0]) / cfg.wheel_base;
    state.heading = normalize_angle(state.heading + state.angular_velocity * cfg.dt);
    state.linear_velocity = (1.0 - cfg.drag) * state.linear_velocity +
                            cfg.wheel_gain * 0.5 * (action[0] + action[1]) * cfg.dt;
  }
  const Vec2 dir{std::cos(state.heading), std::sin(state.heading)};
  state.position = state.position + dir * (state.linear_velocity * cfg.dt);
  const double w = cfg.arena_half_width;
  state.position.x = clamp_to(state.position.x, w);
  state.position.y = clamp_to(state.position.y, w);
  state.step += 1;
}

bool at_nominal_goal(const EnvState& state, const EnvConfig& cfg) {
  return (state.position - state.nominal_goal).norm() <= cfg.goal_radius;
}

bool at_adversarial_goal(const EnvState& state, const EnvConfig& cfg) {
  return (state.position - state.adversarial_goal).norm() <= cfg.goal_radius;
}

double nominal_reward(const EnvState& prev, const EnvState& now, const EnvConfig& cfg) {
  const double d_prev = (prev.position - prev.nominal_goal).norm();
  const double d_now = (now.position - now.nominal_goal).norm();
  return (d_prev - d_now) + (at_nominal_goal(now, cfg) ? 1.0 : 0.0);
}

namespace {

// Unit direction toward target in the agent frame, plus raw distance.
struct GoalView {
  Vec2 compass{0.0, 0.0};
  double distance = 0.0;
};

GoalView goal_view(const EnvState& state, Vec2 target) {
  GoalView v;
  const Vec2 rel = rotate(target - state.position, -state.heading);
  v.distance = rel.norm();
  if (v.distance > 0.0) v.compass = rel * (1.0 / v.distance);
  return v;
}

}  // namespace

void build_observation(const EnvState& state, const EnvConfig& cfg, std::span<double> out) {
  if (static_cast<int>(out.size()) != cfg.obs_dim())
    throw ContractError("observation buffer size mismatch");
  const GoalView nom = goal_view(state, state.nominal_goal);

  out[0] = state.linear_velocity;  // body-frame velocity: forward component
  out[1] = 0.0;                    // and lateral (zero for these kinematics)
  out[2] = state.angular_velocity;
  out[3] = nom.compass.x;
  out[4] = nom.compass.y;
  out[5] = nom.distance;

  for (int b = 0; b < cfg.lidar_bins; ++b) out[6 + b] = 0.0;
  double bearing = std::atan2(nom.compass.y, nom.compass.x);
  if (bearing < 0.0) bearing += 2.0 * kPi;
  int bin = static_cast<int>(bearing / (2.0 * kPi / cfg.lidar_bins));
  if (bin >= cfg.lidar_bins) bin = cfg.lidar_bins - 1;
  const double intensity = 1.0 - nom.distance / cfg.arena_diagonal();
  out[6 + bin] = intensity > 0.0 ? intensity : 0.0;
}

std::array<double, 3> adversarial_goal_features(const EnvState& state, const EnvConfig& cfg) {
  (void)cfg;
  const GoalView adv = goal_view(state, state.adversarial_goal);
  return {adv.compass.x, adv.compass.y, adv.distance};
}

void NominalEnv::reset(std::uint64_t seed, std::span<double> obs_out) {
  state_ = env_reset(cfg_, seed);
  build_observation(state_, cfg_, obs_out);
}

StepResult NominalEnv::step(std::span<const double> action, std::span<double> obs_out) {
  StepResult res;
  res.applied = clamp_action(action);
  const EnvState prev = state_;
  step_dynamics(state_, cfg_, res.applied);
  res.reward = nominal_reward(prev, state_, cfg_);
  res.reached_nominal_goal = at_nominal_goal(state_, cfg_);
  res.reached_adversarial_goal = at_adversarial_goal(state_, cfg_);
  if (res.reached_nominal_goal || res.reached_adversarial_goal) regenerate_goals(state_, cfg_);
  build_observation(state_, cfg_, obs_out);
  return res;
}

}  // namespace artrd::envs
