#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace artrd {

struct StepResult {
  double reward = 0.0;
  bool reached_nominal_goal = false;
  bool reached_adversarial_goal = false;
  // Command applied to the plant this step, after all clamping.
  std::array<double, 2> applied{0.0, 0.0};
};

// Fixed-length episode environment as seen by a trainer or evaluator. Episodes
// never terminate early; callers reset after exactly episode_length() steps.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;
  virtual int episode_length() const = 0;
  virtual void reset(std::uint64_t seed, std::span<double> obs_out) = 0;
  virtual StepResult step(std::span<const double> action, std::span<double> obs_out) = 0;
};

}  // namespace artrd
