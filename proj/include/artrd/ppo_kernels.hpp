#pragma once

#include <span>

#include "artrd/numcore.hpp"

namespace artrd::ppo {

// Minibatch views into the rollout storage. Rows are packed: obs is n*obs_dim
// doubles, actions n*act_dim. Gradients come back averaged over the batch in
// the [weights..., log_std...] layout numcore::adam_step expects.

struct PolicyBatch {
  const numcore::ParamSet* params = nullptr;
  std::span<const double> obs;
  std::span<const double> actions;
  std::span<const double> old_log_probs;
  std::span<const double> advantages;  // already normalized
  int n = 0;
  int obs_dim = 0;
  int act_dim = 0;
  double clip_epsilon = 0.2;
  double entropy_coef = 0.0;
};

struct PolicyGradStats {
  double loss = 0.0;      // mean clipped-surrogate loss (entropy term included)
  double kl_proxy = 0.0;  // mean(old_log_prob - new_log_prob)
};

struct ValueBatch {
  const numcore::ParamSet* params = nullptr;
  std::span<const double> obs;
  std::span<const double> returns;
  int n = 0;
  int obs_dim = 0;
  double value_loss_coef = 0.5;
};

struct ValueGradStats {
  double loss = 0.0;  // mean value_loss_coef * 0.5 * (V - R)^2
};

// Parallel kernels. Samples are processed in fixed chunks of 64 whose partial
// sums are reduced in chunk order, so results are bit-identical for any
// worker-thread count.
PolicyGradStats policy_minibatch_grad(const PolicyBatch& batch, std::span<double> grad);
ValueGradStats value_minibatch_grad(const ValueBatch& batch, std::span<double> grad);

// Serial references: one pass, straight accumulation. Used by tests and the
// benchmark as the ground truth the parallel kernels are checked against.
PolicyGradStats policy_minibatch_grad_ref(const PolicyBatch& batch, std::span<double> grad);
ValueGradStats value_minibatch_grad_ref(const ValueBatch& batch, std::span<double> grad);

}  // namespace artrd::ppo
