// Timing harness for the minibatch gradient kernels: parallel chunked path
// vs the serial reference, plus an end-to-end trainer throughput probe.
// --smoke shrinks everything so the run doubles as a quick regression check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "artrd/envs.hpp"
#include "artrd/ppo.hpp"
#include "artrd/ppo_kernels.hpp"

using namespace artrd;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Batch {
  numcore::ParamSet policy, value;
  std::vector<double> obs, actions, old_lp, adv, rets;
  int n, obs_dim, act_dim;
};

Batch make_batch(int n, int obs_dim, int act_dim) {
  Batch b;
  b.n = n;
  b.obs_dim = obs_dim;
  b.act_dim = act_dim;
  Rng rng(1);
  b.policy = numcore::make_mlp({obs_dim, 64, 64, act_dim}, act_dim, 0.01, rng);
  b.value = numcore::make_mlp({obs_dim, 128, 64, 1}, 0, 1.0, rng);
  numcore::MlpScratch scratch;
  std::vector<double> mean(static_cast<std::size_t>(act_dim));
  for (int i = 0; i < n; ++i) {
    std::vector<double> o(static_cast<std::size_t>(obs_dim));
    for (double& x : o) x = rng.uniform(-1.0, 1.0);
    numcore::mlp_forward(b.policy, o, mean, scratch);
    const auto ga = numcore::gaussian_sample(mean, b.policy.log_std, rng);
    b.obs.insert(b.obs.end(), o.begin(), o.end());
    b.actions.insert(b.actions.end(), ga.sample.begin(), ga.sample.end());
    b.old_lp.push_back(ga.log_prob + rng.uniform(-0.2, 0.2));
    b.adv.push_back(rng.uniform(-2.0, 2.0));
    b.rets.push_back(rng.uniform(-1.0, 3.0));
  }
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  const bool smoke = argc > 1 && std::strcmp(argv[1], "--smoke") == 0;
  const int n = smoke ? 512 : 4096;
  const int reps = smoke ? 3 : 20;

  const Batch b = make_batch(n, 14, 2);
  ppo::PolicyBatch pb;
  pb.params = &b.policy;
  pb.obs = b.obs;
  pb.actions = b.actions;
  pb.old_log_probs = b.old_lp;
  pb.advantages = b.adv;
  pb.n = b.n;
  pb.obs_dim = b.obs_dim;
  pb.act_dim = b.act_dim;
  ppo::ValueBatch vb;
  vb.params = &b.value;
  vb.obs = b.obs;
  vb.returns = b.rets;
  vb.n = b.n;
  vb.obs_dim = b.obs_dim;

  std::vector<double> gp(b.policy.param_count()), gp_ref(b.policy.param_count());
  std::vector<double> gv(b.value.param_count()), gv_ref(b.value.param_count());

  // Warm-up plus parity check: the parallel kernel must reproduce the serial
  // reference to summation-order noise.
  std::fill(gp.begin(), gp.end(), 0.0);
  std::fill(gp_ref.begin(), gp_ref.end(), 0.0);
  ppo::policy_minibatch_grad(pb, gp);
  ppo::policy_minibatch_grad_ref(pb, gp_ref);
  double worst = 0.0;
  for (std::size_t i = 0; i < gp.size(); ++i)
    worst = std::max(worst, std::abs(gp[i] - gp_ref[i]));
  std::fill(gv.begin(), gv.end(), 0.0);
  std::fill(gv_ref.begin(), gv_ref.end(), 0.0);
  ppo::value_minibatch_grad(vb, gv);
  ppo::value_minibatch_grad_ref(vb, gv_ref);
  for (std::size_t i = 0; i < gv.size(); ++i)
    worst = std::max(worst, std::abs(gv[i] - gv_ref[i]));
  std::printf("parity: max |parallel - serial| = %.3e (threads=%d, n=%d)\n", worst,
              worker_threads(), n);
  if (worst > 1e-10) {
    std::printf("FAIL: kernels disagree\n");
    return 1;
  }

  auto bench = [&](const char* name, auto&& fn) {
    const auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const double ms = ms_since(t0) / reps;
    std::printf("%-22s %8.2f ms/batch  %10.0f samples/s\n", name, ms, 1000.0 * n / ms);
    return ms;
  };

  const double p_par = bench("policy parallel", [&] {
    std::fill(gp.begin(), gp.end(), 0.0);
    ppo::policy_minibatch_grad(pb, gp);
  });
  const double p_ref = bench("policy serial ref", [&] {
    std::fill(gp_ref.begin(), gp_ref.end(), 0.0);
    ppo::policy_minibatch_grad_ref(pb, gp_ref);
  });
  const double v_par = bench("value parallel", [&] {
    std::fill(gv.begin(), gv.end(), 0.0);
    ppo::value_minibatch_grad(vb, gv);
  });
  const double v_ref = bench("value serial ref", [&] {
    std::fill(gv_ref.begin(), gv_ref.end(), 0.0);
    ppo::value_minibatch_grad_ref(vb, gv_ref);
  });
  std::printf("speedup: policy %.2fx, value %.2fx\n", p_ref / p_par, v_ref / v_par);

  // End-to-end trainer throughput on the point plant.
  {
    envs::EnvConfig ec;
    ppo::PpoConfig pc;
    pc.total_steps = smoke ? 4096 : 40960;
    envs::NominalEnv env(ec);
    ppo::Trainer trainer(pc, env.obs_dim(), env.act_dim(), 0);
    const auto t0 = Clock::now();
    ppo::train(trainer, env, 0);
    const double secs = ms_since(t0) / 1000.0;
    std::printf("trainer: %lld env steps in %.2f s  (%.0f steps/s)\n", pc.total_steps, secs,
                pc.total_steps / secs);
  }
  return 0;
}
