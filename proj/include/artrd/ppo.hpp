#pragma once

#include <functional>
#include <span>
#include <vector>

#include "artrd/numcore.hpp"
#include "artrd/rollout_env.hpp"

namespace artrd::ppo {

struct PpoConfig {
  double lr = 3e-4;
  int batch_size = 1024;
  int update_interval = 2048;
  double entropy_coef = 0.0;
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs_per_update = 10;
  double value_loss_coef = 0.5;
  long long total_steps = 500000;
  long long checkpoint_interval = 0;  // 0: final checkpoint only
  std::vector<int> policy_hidden = {64, 64};
  std::vector<int> value_hidden = {128, 64};

  void validate() const;
};

struct RolloutBuffer {
  int obs_dim = 0;
  int act_dim = 0;
  int capacity = 0;
  int size = 0;
  std::vector<double> obs;
  std::vector<double> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<unsigned char> dones;

  RolloutBuffer() = default;
  RolloutBuffer(int obs_dim, int act_dim, int capacity);
  bool full() const { return size == capacity; }
  void clear() { size = 0; }
  void push(std::span<const double> observation, std::span<const double> action,
            double log_prob, double reward, double value, bool done);
};

/// Lambda-weighted advantages and returns, unnormalized. bootstrap_value is
/// the value estimate for the state following the last transition; it is
/// masked out when that transition ends an episode.
void compute_gae(const RolloutBuffer& buffer, double gamma, double lambda,
                 double bootstrap_value, std::span<double> advantages,
                 std::span<double> returns);

/// Shift/scale to mean 0, std 1 (population std, epsilon 1e-8).
void normalize_advantages(std::span<double> advantages);

/// Clipped-surrogate contribution of one sample (negated: lower is better).
double ppo_loss(double old_log_prob, double new_log_prob, double advantage,
                double clip_epsilon);

struct UpdateDiagnostics {
  int update_index = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double kl_proxy = 0.0;
  double explained_variance = 0.0;
};

// Owns both networks, their Adam state, the rollout buffer and the sampling
// RNG. One trainer per thread; nothing here is shared.
class Trainer {
 public:
  /// Fresh networks for the given environment shape.
  Trainer(const PpoConfig& cfg, int obs_dim, int act_dim, std::uint64_t seed);
  /// Warm start from existing networks; optimizer state starts fresh.
  Trainer(const PpoConfig& cfg, numcore::ParamSet policy, numcore::ParamSet value,
          std::uint64_t seed);

  numcore::GaussianAction act(std::span<const double> observation);
  double value_of(std::span<const double> observation);
  void record(std::span<const double> observation, std::span<const double> action,
              double log_prob, double reward, double value, bool done);
  bool buffer_full() const { return buffer_.full(); }
  void discard_buffer() { buffer_.clear(); }

  /// One PPO update over the full buffer; clears it. Throws NumericError on a
  /// non-finite gradient, identifying the offending minibatch.
  UpdateDiagnostics update(double bootstrap_value);

  const numcore::ParamSet& policy() const { return policy_; }
  const numcore::ParamSet& value() const { return value_; }
  const PpoConfig& config() const { return cfg_; }
  int updates_done() const { return updates_done_; }

 private:
  PpoConfig cfg_;
  numcore::ParamSet policy_;
  numcore::ParamSet value_;
  numcore::AdamState policy_adam_;
  numcore::AdamState value_adam_;
  RolloutBuffer buffer_;
  Rng rng_;
  int updates_done_ = 0;
  numcore::MlpScratch scratch_;

  // reused per-update storage
  std::vector<double> advantages_, returns_, perm_scratch_;
  std::vector<double> mb_obs_, mb_actions_, mb_old_lp_, mb_adv_, mb_ret_, grad_;
  std::vector<int> perm_;
};

struct CurvePoint {
  long long step = 0;           // cumulative env steps at episode end
  double episode_return = 0.0;  // undiscounted sum of training rewards
  int goals_nominal = 0;
  int goals_adversarial = 0;
};

struct TrainResult {
  numcore::ParamSet policy;
  numcore::ParamSet value;
  std::vector<CurvePoint> curve;
  std::vector<UpdateDiagnostics> diagnostics;
};

using CheckpointSink =
    std::function<void(long long steps_done, const numcore::ParamSet& policy,
                       const numcore::ParamSet& value)>;

/// Interaction loop: fixed-length episodes with per-episode derived seeds,
/// updates every update_interval steps. Deterministic in (trainer seed, env).
TrainResult train(Trainer& trainer, RolloutEnv& env, std::uint64_t seed,
                  const CheckpointSink& checkpoint_sink = nullptr);

/// Seed for episode number `index` of a run seeded with `seed`.
std::uint64_t episode_seed(std::uint64_t seed, long long index);

}  // namespace artrd::ppo
