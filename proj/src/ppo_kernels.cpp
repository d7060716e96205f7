#include "artrd/ppo_kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "artrd/common.hpp"

namespace artrd::ppo {

namespace {

constexpr int kChunk = 64;

struct SampleScratch {
  numcore::MlpScratch mlp;
  std::vector<double> mean;
  std::vector<double> upstream;
};

void check_policy_batch(const PolicyBatch& b, std::span<double> grad) {
  const auto n = static_cast<std::size_t>(b.n);
  if (b.params == nullptr || b.n <= 0) throw ContractError("policy batch empty");
  if (b.obs.size() != n * static_cast<std::size_t>(b.obs_dim) ||
      b.actions.size() != n * static_cast<std::size_t>(b.act_dim) ||
      b.old_log_probs.size() != n || b.advantages.size() != n)
    throw ContractError("policy batch spans inconsistent");
  if (grad.size() != b.params->param_count())
    throw ContractError("policy gradient buffer size mismatch");
}

void check_value_batch(const ValueBatch& b, std::span<double> grad) {
  const auto n = static_cast<std::size_t>(b.n);
  if (b.params == nullptr || b.n <= 0) throw ContractError("value batch empty");
  if (b.obs.size() != n * static_cast<std::size_t>(b.obs_dim) || b.returns.size() != n)
    throw ContractError("value batch spans inconsistent");
  if (grad.size() != b.params->param_count())
    throw ContractError("value gradient buffer size mismatch");
  if (b.params->output_dim() != 1) throw ContractError("value network must have one output");
}

// One sample's contribution: unscaled gradient into grad, loss/kl into the
// accumulators. grad covers [weights..., log_std...].
void policy_sample(const PolicyBatch& b, int i, std::span<double> grad, double& loss_acc,
                   double& kl_acc, SampleScratch& ws) {
  const auto obs_dim = static_cast<std::size_t>(b.obs_dim);
  const auto act_dim = static_cast<std::size_t>(b.act_dim);
  const auto obs = b.obs.subspan(static_cast<std::size_t>(i) * obs_dim, obs_dim);
  const auto act = b.actions.subspan(static_cast<std::size_t>(i) * act_dim, act_dim);
  const std::span<const double> log_std = b.params->log_std;

  ws.mean.resize(act_dim);
  ws.upstream.resize(act_dim);
  numcore::mlp_forward(*b.params, obs, ws.mean, ws.mlp);

  const double new_lp = numcore::gaussian_log_prob(ws.mean, log_std, act);
  const double old_lp = b.old_log_probs[static_cast<std::size_t>(i)];
  const double adv = b.advantages[static_cast<std::size_t>(i)];
  const double ratio = std::exp(new_lp - old_lp);
  const double clipped = std::clamp(ratio, 1.0 - b.clip_epsilon, 1.0 + b.clip_epsilon);
  const double surr = ratio * adv;
  const double surr_clipped = clipped * adv;

  loss_acc += -std::min(surr, surr_clipped) - b.entropy_coef * numcore::gaussian_entropy(log_std);
  kl_acc += old_lp - new_lp;

  // The clipped branch is constant in the parameters, so gradient flows only
  // when the unclipped surrogate is the active minimum.
  const double glp = (surr <= surr_clipped) ? -adv * ratio : 0.0;

  std::span<double> grad_log_std = grad.subspan(b.params->weights.size());
  for (std::size_t d = 0; d < act_dim; ++d) {
    const double inv_sigma = std::exp(-log_std[d]);
    const double z = (act[d] - ws.mean[d]) * inv_sigma;
    ws.upstream[d] = glp * z * inv_sigma;
    grad_log_std[d] += glp * (z * z - 1.0) - b.entropy_coef;
  }
  numcore::backprop_accumulate(*b.params, obs, ws.upstream,
                               grad.first(b.params->weights.size()), ws.mlp);
}

void value_sample(const ValueBatch& b, int i, std::span<double> grad, double& loss_acc,
                  SampleScratch& ws) {
  const auto obs_dim = static_cast<std::size_t>(b.obs_dim);
  const auto obs = b.obs.subspan(static_cast<std::size_t>(i) * obs_dim, obs_dim);
  ws.mean.resize(1);
  ws.upstream.resize(1);
  numcore::mlp_forward(*b.params, obs, ws.mean, ws.mlp);
  const double err = ws.mean[0] - b.returns[static_cast<std::size_t>(i)];
  loss_acc += b.value_loss_coef * 0.5 * err * err;
  ws.upstream[0] = b.value_loss_coef * err;
  numcore::backprop_accumulate(*b.params, obs, ws.upstream, grad, ws.mlp);
}

void scale(std::span<double> grad, double s) {
  for (double& g : grad) g *= s;
}

}  // namespace

PolicyGradStats policy_minibatch_grad_ref(const PolicyBatch& batch, std::span<double> grad) {
  check_policy_batch(batch, grad);
  std::fill(grad.begin(), grad.end(), 0.0);
  SampleScratch ws;
  PolicyGradStats stats;
  for (int i = 0; i < batch.n; ++i)
    policy_sample(batch, i, grad, stats.loss, stats.kl_proxy, ws);
  const double inv_n = 1.0 / batch.n;
  scale(grad, inv_n);
  stats.loss *= inv_n;
  stats.kl_proxy *= inv_n;
  return stats;
}

PolicyGradStats policy_minibatch_grad(const PolicyBatch& batch, std::span<double> grad) {
  check_policy_batch(batch, grad);
  const int n_chunks = (batch.n + kChunk - 1) / kChunk;
  const std::size_t n_params = batch.params->param_count();
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(n_chunks));
  std::vector<double> partial_loss(static_cast<std::size_t>(n_chunks), 0.0);
  std::vector<double> partial_kl(static_cast<std::size_t>(n_chunks), 0.0);

#pragma omp parallel num_threads(worker_threads())
  {
    SampleScratch ws;
#pragma omp for schedule(static)
    for (int c = 0; c < n_chunks; ++c) {
      auto& pg = partial[static_cast<std::size_t>(c)];
      pg.assign(n_params, 0.0);
      const int lo = c * kChunk;
      const int hi = std::min(batch.n, lo + kChunk);
      for (int i = lo; i < hi; ++i)
        policy_sample(batch, i, pg, partial_loss[static_cast<std::size_t>(c)],
                      partial_kl[static_cast<std::size_t>(c)], ws);
    }
  }

  std::fill(grad.begin(), grad.end(), 0.0);
  PolicyGradStats stats;
  for (int c = 0; c < n_chunks; ++c) {
    const auto& pg = partial[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < n_params; ++j) grad[j] += pg[j];
    stats.loss += partial_loss[static_cast<std::size_t>(c)];
    stats.kl_proxy += partial_kl[static_cast<std::size_t>(c)];
  }
  const double inv_n = 1.0 / batch.n;
  scale(grad, inv_n);
  stats.loss *= inv_n;
  stats.kl_proxy *= inv_n;
  return stats;
}

ValueGradStats value_minibatch_grad_ref(const ValueBatch& batch, std::span<double> grad) {
  check_value_batch(batch, grad);
  std::fill(grad.begin(), grad.end(), 0.0);
  SampleScratch ws;
  ValueGradStats stats;
  for (int i = 0; i < batch.n; ++i) value_sample(batch, i, grad, stats.loss, ws);
  const double inv_n = 1.0 / batch.n;
  scale(grad, inv_n);
  stats.loss *= inv_n;
  return stats;
}

ValueGradStats value_minibatch_grad(const ValueBatch& batch, std::span<double> grad) {
  check_value_batch(batch, grad);
  const int n_chunks = (batch.n + kChunk - 1) / kChunk;
  const std::size_t n_params = batch.params->param_count();
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(n_chunks));
  std::vector<double> partial_loss(static_cast<std::size_t>(n_chunks), 0.0);

#pragma omp parallel num_threads(worker_threads())
  {
    SampleScratch ws;
#pragma omp for schedule(static)
    for (int c = 0; c < n_chunks; ++c) {
      auto& pg = partial[static_cast<std::size_t>(c)];
      pg.assign(n_params, 0.0);
      const int lo = c * kChunk;
      const int hi = std::min(batch.n, lo + kChunk);
      for (int i = lo; i < hi; ++i)
        value_sample(batch, i, pg, partial_loss[static_cast<std::size_t>(c)], ws);
    }
  }

  std::fill(grad.begin(), grad.end(), 0.0);
  ValueGradStats stats;
  for (int c = 0; c < n_chunks; ++c) {
    const auto& pg = partial[static_cast<std::size_t>(c)];
    for (std::size_t j = 0; j < n_params; ++j) grad[j] += pg[j];
    stats.loss += partial_loss[static_cast<std::size_t>(c)];
  }
  const double inv_n = 1.0 / batch.n;
  scale(grad, inv_n);
  stats.loss *= inv_n;
  return stats;
}

}  // namespace artrd::ppo
