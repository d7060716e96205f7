#include "artrd/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "artrd/ppo_kernels.hpp"

namespace artrd::ppo {

void PpoConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (update_interval <= 0) throw ConfigError("update_interval must be positive");
  if (batch_size > update_interval) throw ConfigError("batch_size exceeds update_interval");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must lie in [0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ConfigError("clip_epsilon must lie in (0, 1)");
  if (epochs_per_update <= 0) throw ConfigError("epochs_per_update must be positive");
  if (value_loss_coef < 0.0) throw ConfigError("value_loss_coef must be non-negative");
  if (total_steps < 0) throw ConfigError("total_steps must be non-negative");
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be non-negative");
  for (int h : policy_hidden)
    if (h <= 0) throw ConfigError("policy_hidden widths must be positive");
  for (int h : value_hidden)
    if (h <= 0) throw ConfigError("value_hidden widths must be positive");
}

RolloutBuffer::RolloutBuffer(int obs_dim, int act_dim, int capacity)
    : obs_dim(obs_dim), act_dim(act_dim), capacity(capacity) {
  obs.resize(static_cast<std::size_t>(capacity) * obs_dim);
  actions.resize(static_cast<std::size_t>(capacity) * act_dim);
  log_probs.resize(static_cast<std::size_t>(capacity));
  rewards.resize(static_cast<std::size_t>(capacity));
  values.resize(static_cast<std::size_t>(capacity));
  dones.resize(static_cast<std::size_t>(capacity));
}

void RolloutBuffer::push(std::span<const double> observation, std::span<const double> action,
                         double log_prob, double reward, double value, bool done) {
  if (size >= capacity) throw ContractError("rollout buffer overflow");
  if (static_cast<int>(observation.size()) != obs_dim ||
      static_cast<int>(action.size()) != act_dim)
    throw ContractError("rollout buffer row size mismatch");
  std::copy(observation.begin(), observation.end(),
            obs.begin() + static_cast<std::size_t>(size) * obs_dim);
  std::copy(action.begin(), action.end(),
            actions.begin() + static_cast<std::size_t>(size) * act_dim);
  log_probs[static_cast<std::size_t>(size)] = log_prob;
  rewards[static_cast<std::size_t>(size)] = reward;
  values[static_cast<std::size_t>(size)] = value;
  dones[static_cast<std::size_t>(size)] = done ? 1 : 0;
  ++size;
}

void compute_gae(const RolloutBuffer& buffer, double gamma, double lambda,
                 double bootstrap_value, std::span<double> advantages,
                 std::span<double> returns) {
  const int n = buffer.size;
  if (n == 0) throw ContractError("compute_gae on empty buffer");
  if (static_cast<int>(advantages.size()) != n || static_cast<int>(returns.size()) != n)
    throw ContractError("compute_gae output size mismatch");

  double adv_next = 0.0;
  double value_next = bootstrap_value;
  for (int t = n - 1; t >= 0; --t) {
    const double nonterminal = buffer.dones[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
    const double delta = buffer.rewards[static_cast<std::size_t>(t)] +
                         gamma * value_next * nonterminal -
                         buffer.values[static_cast<std::size_t>(t)];
    adv_next = delta + gamma * lambda * nonterminal * adv_next;
    advantages[static_cast<std::size_t>(t)] = adv_next;
    returns[static_cast<std::size_t>(t)] =
        adv_next + buffer.values[static_cast<std::size_t>(t)];
    value_next = buffer.values[static_cast<std::size_t>(t)];
  }
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= n;
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : advantages) a = (a - mean) * inv;
}

double ppo_loss(double old_log_prob, double new_log_prob, double advantage,
                double clip_epsilon) {
  const double ratio = std::exp(new_log_prob - old_log_prob);
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return -std::min(ratio * advantage, clipped * advantage);
}

Trainer::Trainer(const PpoConfig& cfg, int obs_dim, int act_dim, std::uint64_t seed)
    : cfg_(cfg), rng_(Rng::derive(seed, 0x77)) {
  cfg_.validate();
  std::vector<int> policy_dims{obs_dim};
  policy_dims.insert(policy_dims.end(), cfg_.policy_hidden.begin(), cfg_.policy_hidden.end());
  policy_dims.push_back(act_dim);
  std::vector<int> value_dims{obs_dim};
  value_dims.insert(value_dims.end(), cfg_.value_hidden.begin(), cfg_.value_hidden.end());
  value_dims.push_back(1);
  policy_ = numcore::make_mlp(std::move(policy_dims), act_dim, 0.01, rng_);
  value_ = numcore::make_mlp(std::move(value_dims), 0, 1.0, rng_);
  policy_adam_ = numcore::AdamState(policy_.param_count());
  value_adam_ = numcore::AdamState(value_.param_count());
  buffer_ = RolloutBuffer(obs_dim, act_dim, cfg_.update_interval);
}

Trainer::Trainer(const PpoConfig& cfg, numcore::ParamSet policy, numcore::ParamSet value,
                 std::uint64_t seed)
    : cfg_(cfg), policy_(std::move(policy)), value_(std::move(value)),
      rng_(Rng::derive(seed, 0x77)) {
  cfg_.validate();
  if (value_.output_dim() != 1) throw ContractError("value network must have one output");
  if (policy_.act_dim() != policy_.output_dim())
    throw ContractError("policy log_std length must match its output dimension");
  if (policy_.input_dim() != value_.input_dim())
    throw ContractError("policy and value networks disagree on observation size");
  policy_adam_ = numcore::AdamState(policy_.param_count());
  value_adam_ = numcore::AdamState(value_.param_count());
  buffer_ = RolloutBuffer(policy_.input_dim(), policy_.output_dim(), cfg_.update_interval);
}

numcore::GaussianAction Trainer::act(std::span<const double> observation) {
  std::vector<double> mean(static_cast<std::size_t>(policy_.output_dim()));
  mlp_forward(policy_, observation, mean, scratch_);
  return numcore::gaussian_sample(mean, policy_.log_std, rng_);
}

double Trainer::value_of(std::span<const double> observation) {
  double v = 0.0;
  mlp_forward(value_, observation, std::span<double>(&v, 1), scratch_);
  return v;
}

void Trainer::record(std::span<const double> observation, std::span<const double> action,
                     double log_prob, double reward, double value, bool done) {
  buffer_.push(observation, action, log_prob, reward, value, done);
}

namespace {

void require_finite(std::span<const double> grad, const std::string& context) {
  for (double g : grad)
    if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + context);
}

double explained_variance(std::span<const double> returns, std::span<const double> values) {
  const double n = static_cast<double>(returns.size());
  double mean_r = 0.0, mean_e = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    mean_r += returns[i];
    mean_e += returns[i] - values[i];
  }
  mean_r /= n;
  mean_e /= n;
  double var_r = 0.0, var_err = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    var_r += (returns[i] - mean_r) * (returns[i] - mean_r);
    const double e = (returns[i] - values[i]) - mean_e;
    var_err += e * e;
  }
  if (var_r < 1e-12) return 0.0;
  return 1.0 - var_err / var_r;
}

}  // namespace

UpdateDiagnostics Trainer::update(double bootstrap_value) {
  if (!buffer_.full()) throw ContractError("update requires a full rollout buffer");
  const int n = buffer_.size;
  advantages_.resize(static_cast<std::size_t>(n));
  returns_.resize(static_cast<std::size_t>(n));
  compute_gae(buffer_, cfg_.gamma, cfg_.gae_lambda, bootstrap_value, advantages_, returns_);

  UpdateDiagnostics diag;
  diag.update_index = updates_done_;
  diag.explained_variance = explained_variance(returns_, buffer_.values);

  normalize_advantages(advantages_);

  perm_.resize(static_cast<std::size_t>(n));
  int minibatches = 0;
  for (int epoch = 0; epoch < cfg_.epochs_per_update; ++epoch) {
    std::iota(perm_.begin(), perm_.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng_.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
    }

    for (int start = 0; start < n; start += cfg_.batch_size) {
      const int m = std::min(cfg_.batch_size, n - start);
      const int od = buffer_.obs_dim, ad = buffer_.act_dim;
      mb_obs_.resize(static_cast<std::size_t>(m) * od);
      mb_actions_.resize(static_cast<std::size_t>(m) * ad);
      mb_old_lp_.resize(static_cast<std::size_t>(m));
      mb_adv_.resize(static_cast<std::size_t>(m));
      mb_ret_.resize(static_cast<std::size_t>(m));
      for (int r = 0; r < m; ++r) {
        const auto src = static_cast<std::size_t>(perm_[static_cast<std::size_t>(start + r)]);
        std::copy_n(buffer_.obs.begin() + src * od, od,
                    mb_obs_.begin() + static_cast<std::size_t>(r) * od);
        std::copy_n(buffer_.actions.begin() + src * ad, ad,
                    mb_actions_.begin() + static_cast<std::size_t>(r) * ad);
        mb_old_lp_[static_cast<std::size_t>(r)] = buffer_.log_probs[src];
        mb_adv_[static_cast<std::size_t>(r)] = advantages_[src];
        mb_ret_[static_cast<std::size_t>(r)] = returns_[src];
      }
      const std::string where = "update " + std::to_string(updates_done_) + " epoch " +
                                std::to_string(epoch) + " minibatch " +
                                std::to_string(start / cfg_.batch_size);

      PolicyBatch pb;
      pb.params = &policy_;
      pb.obs = mb_obs_;
      pb.actions = mb_actions_;
      pb.old_log_probs = mb_old_lp_;
      pb.advantages = mb_adv_;
      pb.n = m;
      pb.obs_dim = od;
      pb.act_dim = ad;
      pb.clip_epsilon = cfg_.clip_epsilon;
      pb.entropy_coef = cfg_.entropy_coef;
      grad_.resize(policy_.param_count());
      const PolicyGradStats ps = policy_minibatch_grad(pb, grad_);
      require_finite(grad_, "policy " + where);
      numcore::adam_step(policy_, grad_, policy_adam_, {.lr = cfg_.lr});

      ValueBatch vb;
      vb.params = &value_;
      vb.obs = mb_obs_;
      vb.returns = mb_ret_;
      vb.n = m;
      vb.obs_dim = od;
      vb.value_loss_coef = cfg_.value_loss_coef;
      grad_.resize(value_.param_count());
      const ValueGradStats vs = value_minibatch_grad(vb, grad_);
      require_finite(grad_, "value " + where);
      numcore::adam_step(value_, grad_, value_adam_, {.lr = cfg_.lr});

      diag.policy_loss += ps.loss;
      diag.kl_proxy += ps.kl_proxy;
      diag.value_loss += vs.loss;
      ++minibatches;
    }
  }

  diag.policy_loss /= minibatches;
  diag.kl_proxy /= minibatches;
  diag.value_loss /= minibatches;
  ++updates_done_;
  buffer_.clear();
  return diag;
}

std::uint64_t episode_seed(std::uint64_t seed, long long index) {
  return splitmix64(splitmix64(seed) ^
                    (0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(index) + 1)));
}

TrainResult train(Trainer& trainer, RolloutEnv& env, std::uint64_t seed,
                  const CheckpointSink& checkpoint_sink) {
  TrainResult out;
  const long long total = trainer.config().total_steps;
  if (total > 0) {
    const int ep_len = env.episode_length();
    std::vector<double> obs(static_cast<std::size_t>(env.obs_dim()));
    std::vector<double> next_obs(obs.size());
    long long steps = 0;
    long long episode = 0;
    env.reset(episode_seed(seed, episode), obs);
    double ep_return = 0.0;
    int ep_nominal = 0, ep_adversarial = 0, ep_step = 0;
    const long long ckpt_every = trainer.config().checkpoint_interval;
    long long next_ckpt = ckpt_every > 0 ? ckpt_every : -1;

    while (steps < total) {
      const numcore::GaussianAction ga = trainer.act(obs);
      const double v = trainer.value_of(obs);
      const StepResult res = env.step(ga.sample, next_obs);
      ++ep_step;
      ++steps;
      const bool done = ep_step == ep_len;
      trainer.record(obs, ga.sample, ga.log_prob, res.reward, v, done);
      ep_return += res.reward;
      ep_nominal += res.reached_nominal_goal ? 1 : 0;
      ep_adversarial += res.reached_adversarial_goal ? 1 : 0;

      if (trainer.buffer_full())
        out.diagnostics.push_back(trainer.update(trainer.value_of(next_obs)));

      std::swap(obs, next_obs);
      if (done) {
        out.curve.push_back({steps, ep_return, ep_nominal, ep_adversarial});
        ++episode;
        env.reset(episode_seed(seed, episode), obs);
        ep_return = 0.0;
        ep_nominal = ep_adversarial = 0;
        ep_step = 0;
      }
      if (next_ckpt > 0 && steps >= next_ckpt && steps < total) {
        if (checkpoint_sink) checkpoint_sink(steps, trainer.policy(), trainer.value());
        next_ckpt += ckpt_every;
      }
    }
  }
  out.policy = trainer.policy();
  out.value = trainer.value();
  return out;
}

}  // namespace artrd::ppo
