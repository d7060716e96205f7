#include "artrd/eval.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "artrd/ppo.hpp"

namespace artrd::eval {

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

template <typename Get>
MeanStd episode_stat(std::span<const EpisodeResult> rows, Get get) {
  MeanStd out;
  const std::size_t n = rows.size();
  if (n == 0) return out;
  for (const auto& r : rows) out.mean += get(r);
  out.mean /= static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (const auto& r : rows) {
      const double d = get(r) - out.mean;
      ss += d * d;
    }
    out.std = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return out;
}

EpisodeResult run_episode(const envs::EnvConfig& cfg, const EvalScenario& scenario,
                          const EvalSubject& subject, std::uint64_t episode_seed) {
  EpisodeResult out;
  envs::EnvState state = envs::env_reset(cfg, episode_seed);

  numcore::MlpScratch scratch;
  std::vector<double> obs(static_cast<std::size_t>(cfg.obs_dim()));
  std::vector<double> action(static_cast<std::size_t>(envs::EnvConfig::kActDim));
  std::vector<double> delta(action.size());
  std::vector<double> adv_obs;
  if (scenario.attack_enabled)
    adv_obs.resize(static_cast<std::size_t>(
        attack::adv_obs_dim(subject.attack_cfg.variant, cfg)));

  for (int t = 0; t < scenario.steps_per_episode; ++t) {
    envs::build_observation(state, cfg, obs);
    mlp_forward(*subject.nominal, obs, action, scratch);

    std::array<double, 2> applied{};
    if (scenario.attack_enabled) {
      attack::make_adv_observation(subject.attack_cfg.variant, obs, action,
                                   envs::adversarial_goal_features(state, cfg), adv_obs);
      mlp_forward(*subject.adversary, adv_obs, delta, scratch);
      for (std::size_t i = 0; i < applied.size(); ++i)
        applied[i] = clamp_unit(action[i] +
                                clamp_to(delta[i], subject.attack_cfg.perturbation_bound));
    } else {
      for (std::size_t i = 0; i < applied.size(); ++i) applied[i] = clamp_unit(action[i]);
    }

    const double d_nom_prev = (state.position - state.nominal_goal).norm();
    const double d_adv_prev = (state.position - state.adversarial_goal).norm();
    envs::step_dynamics(state, cfg, applied);
    const double d_nom_now = (state.position - state.nominal_goal).norm();
    const double d_adv_now = (state.position - state.adversarial_goal).norm();
    const bool at_nom = envs::at_nominal_goal(state, cfg);
    const bool at_adv = envs::at_adversarial_goal(state, cfg);

    out.nominal_return += (d_nom_prev - d_nom_now) + (at_nom ? 1.0 : 0.0);
    out.adversarial_return +=
        attack::adv_reward(d_adv_prev, d_adv_now, at_adv, at_nom, subject.attack_cfg);
    out.nominal_goals += at_nom ? 1 : 0;
    out.adversarial_goals += at_adv ? 1 : 0;
    for (double a : applied)
      if (std::abs(a) >= scenario.extreme_threshold) ++out.extreme_actions;

    if (at_nom || at_adv) envs::regenerate_goals(state, cfg);
  }
  return out;
}

}  // namespace

EvalReport evaluate(const envs::EnvConfig& base_cfg, const EvalScenario& scenario,
                    const EvalSubject& subject, std::uint64_t seed) {
  if (scenario.episodes <= 0 || scenario.steps_per_episode <= 0)
    throw ConfigError("evaluation needs positive episode and step counts");
  if (subject.nominal == nullptr) throw ContractError("evaluate: missing nominal policy");

  envs::EnvConfig cfg = base_cfg;
  cfg.min_goal_separation = scenario.min_goal_separation;
  cfg.max_steps = scenario.steps_per_episode;
  cfg.validate();

  if (subject.nominal->input_dim() != cfg.obs_dim() ||
      subject.nominal->output_dim() != envs::EnvConfig::kActDim)
    throw CheckpointError("nominal policy does not fit this environment");
  if (scenario.attack_enabled) {
    if (subject.adversary == nullptr)
      throw ContractError("evaluate: attack enabled but no adversary given");
    if (subject.adversary->input_dim() !=
            attack::adv_obs_dim(subject.attack_cfg.variant, cfg) ||
        subject.adversary->output_dim() != envs::EnvConfig::kActDim)
      throw CheckpointError("adversary policy does not fit this environment");
  }

  EvalReport report;
  report.scenario = scenario;
  report.seed = seed;
  report.episodes.resize(static_cast<std::size_t>(scenario.episodes));

#pragma omp parallel for schedule(static) num_threads(worker_threads())
  for (int e = 0; e < scenario.episodes; ++e)
    report.episodes[static_cast<std::size_t>(e)] =
        run_episode(cfg, scenario, subject, ppo::episode_seed(seed, e));

  const auto ng = episode_stat(report.episodes, [](const EpisodeResult& r) {
    return static_cast<double>(r.nominal_goals);
  });
  const auto ag = episode_stat(report.episodes, [](const EpisodeResult& r) {
    return static_cast<double>(r.adversarial_goals);
  });
  const auto ex = episode_stat(report.episodes, [](const EpisodeResult& r) {
    return static_cast<double>(r.extreme_actions);
  });
  report.nominal_goals_mean = ng.mean;
  report.nominal_goals_std = ng.std;
  report.adversarial_goals_mean = ag.mean;
  report.adversarial_goals_std = ag.std;
  report.extreme_actions_mean = ex.mean;
  report.extreme_actions_std = ex.std;
  report.nominal_return_mean =
      episode_stat(report.episodes, [](const EpisodeResult& r) { return r.nominal_return; })
          .mean;
  report.adversarial_return_mean =
      episode_stat(report.episodes,
                   [](const EpisodeResult& r) { return r.adversarial_return; })
          .mean;
  return report;
}

int extreme_action_count(std::span<const double> actions, double threshold) {
  int count = 0;
  for (double a : actions)
    if (std::abs(a) >= threshold) ++count;
  return count;
}

namespace {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double robustness_correlation(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 5)
    throw ContractError("robustness correlation needs at least 5 pairs");
  std::vector<double> xs, ys;
  xs.reserve(pairs.size());
  ys.reserve(pairs.size());
  for (const auto& [x, y] : pairs) {
    xs.push_back(x);
    ys.push_back(y);
  }
  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);

  const double n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double mean_extreme_actions(const envs::EnvConfig& cfg, const numcore::ParamSet& nominal,
                            int episodes, std::uint64_t seed, double threshold) {
  EvalScenario scenario;
  scenario.min_goal_separation = cfg.min_goal_separation;
  scenario.episodes = episodes;
  scenario.steps_per_episode = cfg.max_steps;
  scenario.attack_enabled = false;
  scenario.extreme_threshold = threshold;
  EvalSubject subject;
  subject.nominal = &nominal;
  return evaluate(cfg, scenario, subject, seed).extreme_actions_mean;
}

namespace {

void pool_cell(std::span<const EvalReport> reports, DefenseCell& cell) {
  std::vector<EpisodeResult> rows;
  for (const auto& r : reports)
    rows.insert(rows.end(), r.episodes.begin(), r.episodes.end());
  const auto ng = episode_stat(rows, [](const EpisodeResult& e) {
    return static_cast<double>(e.nominal_goals);
  });
  const auto ag = episode_stat(rows, [](const EpisodeResult& e) {
    return static_cast<double>(e.adversarial_goals);
  });
  cell.nominal_goals_mean = ng.mean;
  cell.nominal_goals_std = ng.std;
  cell.adversarial_goals_mean = ag.mean;
  cell.adversarial_goals_std = ag.std;
}

void require_matching_seeds(std::span<const EvalReport> a, std::span<const EvalReport> b) {
  if (a.size() != b.size()) throw ContractError("defense report: seed sets differ in size");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].seed != b[i].seed) throw ContractError("defense report: seed sets differ");
}

}  // namespace

DefenseTable defense_report(std::span<const EvalReport> undefended_no_attack,
                            std::span<const EvalReport> undefended_attack,
                            std::span<const EvalReport> defended_no_attack,
                            std::span<const EvalReport> defended_attack) {
  if (undefended_no_attack.empty()) throw ContractError("defense report: no reports");
  require_matching_seeds(undefended_no_attack, defended_no_attack);
  require_matching_seeds(undefended_attack, defended_attack);

  DefenseTable table;
  pool_cell(undefended_no_attack, table.undefended_no_attack);
  pool_cell(undefended_attack, table.undefended_attack);
  pool_cell(defended_no_attack, table.defended_no_attack);
  pool_cell(defended_attack, table.defended_attack);

  const double pre = table.undefended_attack.adversarial_goals_mean;
  const double post = table.defended_attack.adversarial_goals_mean;
  table.adversarial_reduction = pre > 0.0 ? (pre - post) / pre : 0.0;

  const double nom_pre = table.undefended_no_attack.nominal_goals_mean;
  const double nom_post = table.defended_no_attack.nominal_goals_mean;
  if (nom_pre > 0.0)
    table.nominal_retention = nom_post / nom_pre;
  else
    table.nominal_retention =
        nom_post > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return table;
}

}  // namespace artrd::eval
