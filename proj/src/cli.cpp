#include "artrd/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "artrd/csv.hpp"
#include "artrd/eval.hpp"
#include "artrd/sha1.hpp"
#include "artrd/svg.hpp"

namespace artrd::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Config document.

[[noreturn]] void config_fail(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_fail("config section '" + where + "' must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) config_fail("unknown config key '" + where + it.key() + "'");
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail("bad value for config key '" + where + key + "'");
  }
}

envs::Kind parse_kind(const std::string& s) {
  if (s == "point") return envs::Kind::Point;
  if (s == "car") return envs::Kind::Car;
  config_fail("env kind must be 'point' or 'car', got '" + s + "'");
}

std::string kind_name(envs::Kind k) { return k == envs::Kind::Point ? "point" : "car"; }

attack::AdvVariant parse_variant(const std::string& s) {
  if (s == "state-aware") return attack::AdvVariant::StateAware;
  if (s == "state-unaware") return attack::AdvVariant::StateUnaware;
  config_fail("variant must be 'state-aware' or 'state-unaware', got '" + s + "'");
}

std::string variant_name(attack::AdvVariant v) {
  return v == attack::AdvVariant::StateAware ? "state-aware" : "state-unaware";
}

defense::Scheme parse_scheme(const std::string& s) {
  if (s == "tandem") return defense::Scheme::TandemFromScratch;
  if (s == "fixed-adv") return defense::Scheme::FixedAdvFromScratch;
  if (s == "transfer") return defense::Scheme::TransferFineTune;
  config_fail("scheme must be 'tandem', 'fixed-adv' or 'transfer', got '" + s + "'");
}

std::string scheme_name(defense::Scheme s) {
  switch (s) {
    case defense::Scheme::TandemFromScratch: return "tandem";
    case defense::Scheme::FixedAdvFromScratch: return "fixed-adv";
    case defense::Scheme::TransferFineTune: return "transfer";
  }
  return "transfer";
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_fail(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  check_keys(doc, "", {"label", "seeds", "env", "ppo", "attack", "defense", "eval"});
  read_field(doc, "label", cfg.label, "");
  read_field(doc, "seeds", cfg.seeds, "");

  if (doc.contains("env")) {
    const json& e = doc.at("env");
    check_keys(e, "env.",
               {"kind", "arena_half_width", "goal_radius", "min_goal_separation", "dt",
                "max_steps", "lidar_bins", "thrust_gain", "turn_gain", "drag", "wheel_gain",
                "wheel_base"});
    std::string kind = kind_name(cfg.env.kind);
    read_field(e, "kind", kind, "env.");
    cfg.env.kind = parse_kind(kind);
    read_field(e, "arena_half_width", cfg.env.arena_half_width, "env.");
    read_field(e, "goal_radius", cfg.env.goal_radius, "env.");
    read_field(e, "min_goal_separation", cfg.env.min_goal_separation, "env.");
    read_field(e, "dt", cfg.env.dt, "env.");
    read_field(e, "max_steps", cfg.env.max_steps, "env.");
    read_field(e, "lidar_bins", cfg.env.lidar_bins, "env.");
    read_field(e, "thrust_gain", cfg.env.thrust_gain, "env.");
    read_field(e, "turn_gain", cfg.env.turn_gain, "env.");
    read_field(e, "drag", cfg.env.drag, "env.");
    read_field(e, "wheel_gain", cfg.env.wheel_gain, "env.");
    read_field(e, "wheel_base", cfg.env.wheel_base, "env.");
  }

  if (doc.contains("ppo")) {
    const json& p = doc.at("ppo");
    check_keys(p, "ppo.",
               {"lr", "batch_size", "update_interval", "entropy_coef", "clip_epsilon", "gamma",
                "gae_lambda", "epochs_per_update", "value_loss_coef", "total_steps",
                "checkpoint_interval", "policy_hidden", "value_hidden"});
    read_field(p, "lr", cfg.ppo.lr, "ppo.");
    read_field(p, "batch_size", cfg.ppo.batch_size, "ppo.");
    read_field(p, "update_interval", cfg.ppo.update_interval, "ppo.");
    read_field(p, "entropy_coef", cfg.ppo.entropy_coef, "ppo.");
    read_field(p, "clip_epsilon", cfg.ppo.clip_epsilon, "ppo.");
    read_field(p, "gamma", cfg.ppo.gamma, "ppo.");
    read_field(p, "gae_lambda", cfg.ppo.gae_lambda, "ppo.");
    read_field(p, "epochs_per_update", cfg.ppo.epochs_per_update, "ppo.");
    read_field(p, "value_loss_coef", cfg.ppo.value_loss_coef, "ppo.");
    read_field(p, "total_steps", cfg.ppo.total_steps, "ppo.");
    read_field(p, "checkpoint_interval", cfg.ppo.checkpoint_interval, "ppo.");
    read_field(p, "policy_hidden", cfg.ppo.policy_hidden, "ppo.");
    read_field(p, "value_hidden", cfg.ppo.value_hidden, "ppo.");
  }

  if (doc.contains("attack")) {
    const json& a = doc.at("attack");
    check_keys(a, "attack.",
               {"variant", "perturbation_bound", "penalty", "goal_bonus", "nominal_checkpoint"});
    std::string variant = variant_name(cfg.attack.variant);
    read_field(a, "variant", variant, "attack.");
    cfg.attack.variant = parse_variant(variant);
    read_field(a, "perturbation_bound", cfg.attack.perturbation_bound, "attack.");
    read_field(a, "penalty", cfg.attack.penalty, "attack.");
    read_field(a, "goal_bonus", cfg.attack.goal_bonus, "attack.");
    read_field(a, "nominal_checkpoint", cfg.attack_nominal_checkpoint, "attack.");
  }

  if (doc.contains("defense")) {
    const json& d = doc.at("defense");
    check_keys(d, "defense.", {"scheme", "cadence", "nominal_checkpoint", "adversary_checkpoint"});
    std::string scheme = scheme_name(cfg.defense_scheme);
    read_field(d, "scheme", scheme, "defense.");
    cfg.defense_scheme = parse_scheme(scheme);
    read_field(d, "cadence", cfg.defense_cadence, "defense.");
    read_field(d, "nominal_checkpoint", cfg.defense_nominal_checkpoint, "defense.");
    read_field(d, "adversary_checkpoint", cfg.defense_adversary_checkpoint, "defense.");
  }

  if (doc.contains("eval")) {
    const json& v = doc.at("eval");
    check_keys(v, "eval.",
               {"separations", "episodes", "steps_per_episode", "extreme_threshold",
                "nominal_checkpoint", "adversary_checkpoint"});
    read_field(v, "separations", cfg.eval_separations, "eval.");
    read_field(v, "episodes", cfg.eval_episodes, "eval.");
    read_field(v, "steps_per_episode", cfg.eval_steps, "eval.");
    read_field(v, "extreme_threshold", cfg.eval_extreme_threshold, "eval.");
    read_field(v, "nominal_checkpoint", cfg.eval_nominal_checkpoint, "eval.");
    read_field(v, "adversary_checkpoint", cfg.eval_adversary_checkpoint, "eval.");
  }
  return cfg;
}

std::string dump_config(const RunConfig& cfg) {
  json doc;
  doc["label"] = cfg.label;
  doc["seeds"] = cfg.seeds;
  doc["env"] = {{"kind", kind_name(cfg.env.kind)},
                {"arena_half_width", cfg.env.arena_half_width},
                {"goal_radius", cfg.env.goal_radius},
                {"min_goal_separation", cfg.env.min_goal_separation},
                {"dt", cfg.env.dt},
                {"max_steps", cfg.env.max_steps},
                {"lidar_bins", cfg.env.lidar_bins},
                {"thrust_gain", cfg.env.thrust_gain},
                {"turn_gain", cfg.env.turn_gain},
                {"drag", cfg.env.drag},
                {"wheel_gain", cfg.env.wheel_gain},
                {"wheel_base", cfg.env.wheel_base}};
  doc["ppo"] = {{"lr", cfg.ppo.lr},
                {"batch_size", cfg.ppo.batch_size},
                {"update_interval", cfg.ppo.update_interval},
                {"entropy_coef", cfg.ppo.entropy_coef},
                {"clip_epsilon", cfg.ppo.clip_epsilon},
                {"gamma", cfg.ppo.gamma},
                {"gae_lambda", cfg.ppo.gae_lambda},
                {"epochs_per_update", cfg.ppo.epochs_per_update},
                {"value_loss_coef", cfg.ppo.value_loss_coef},
                {"total_steps", cfg.ppo.total_steps},
                {"checkpoint_interval", cfg.ppo.checkpoint_interval},
                {"policy_hidden", cfg.ppo.policy_hidden},
                {"value_hidden", cfg.ppo.value_hidden}};
  doc["attack"] = {{"variant", variant_name(cfg.attack.variant)},
                   {"perturbation_bound", cfg.attack.perturbation_bound},
                   {"penalty", cfg.attack.penalty},
                   {"goal_bonus", cfg.attack.goal_bonus},
                   {"nominal_checkpoint", cfg.attack_nominal_checkpoint}};
  doc["defense"] = {{"scheme", scheme_name(cfg.defense_scheme)},
                    {"cadence", cfg.defense_cadence},
                    {"nominal_checkpoint", cfg.defense_nominal_checkpoint},
                    {"adversary_checkpoint", cfg.defense_adversary_checkpoint}};
  doc["eval"] = {{"separations", cfg.eval_separations},
                 {"episodes", cfg.eval_episodes},
                 {"steps_per_episode", cfg.eval_steps},
                 {"extreme_threshold", cfg.eval_extreme_threshold},
                 {"nominal_checkpoint", cfg.eval_nominal_checkpoint},
                 {"adversary_checkpoint", cfg.eval_adversary_checkpoint}};
  return doc.dump(2) + "\n";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    const auto dots = token.find("..");
    try {
      if (dots == std::string::npos) {
        seeds.push_back(std::stoull(token));
      } else {
        const std::uint64_t lo = std::stoull(token.substr(0, dots));
        const std::uint64_t hi = std::stoull(token.substr(dots + 2));
        if (hi < lo) config_fail("descending seed range '" + token + "'");
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::logic_error&) {
      config_fail("bad seed token '" + token + "'");
    }
  }
  if (seeds.empty()) config_fail("empty seed list");
  return seeds;
}

std::vector<double> parse_separation_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    try {
      out.push_back(std::stod(token));
    } catch (const std::logic_error&) {
      config_fail("bad separation '" + token + "'");
    }
  }
  if (out.empty()) config_fail("empty separation list");
  return out;
}

std::string substitute_seed(const std::string& path_template, std::uint64_t seed) {
  std::string out = path_template;
  const std::string key = "{seed}";
  std::size_t pos = 0;
  while ((pos = out.find(key, pos)) != std::string::npos) {
    out.replace(pos, key.size(), std::to_string(seed));
    pos += 1;
  }
  return out;
}

std::string value_path_for(const std::string& policy_path) {
  const std::string suffix = "_policy.ckpt";
  if (policy_path.size() < suffix.size() ||
      policy_path.compare(policy_path.size() - suffix.size(), suffix.size(), suffix) != 0)
    config_fail("cannot derive value checkpoint path from '" + policy_path +
                "' (expected a *_policy.ckpt path)");
  return policy_path.substr(0, policy_path.size() - suffix.size()) + "_value.ckpt";
}

namespace {

// ---------------------------------------------------------------------------
// Artifacts and manifest.

using ArtifactList = std::vector<std::pair<std::string, std::string>>;  // rel path, hash

struct ArtifactLog {
  fs::path dir;
  ArtifactList entries;

  void write(const std::string& rel, const std::string& content) {
    write_file_atomic(dir / rel, content);
    entries.emplace_back(rel, git_blob_hash(content));
  }
};

void update_manifest(const fs::path& dir, const std::string& entry_key,
                     const std::string& config_hash, const ArtifactList& artifacts,
                     double duration_seconds) {
  json manifest = json::object();
  const fs::path path = dir / "manifest.json";
  if (fs::exists(path)) {
    try {
      manifest = json::parse(read_file(path));
    } catch (const std::exception&) {
      manifest = json::object();
    }
  }
  manifest["tool"] = kToolVersion;
  if (!manifest.contains("entries") || !manifest["entries"].is_object())
    manifest["entries"] = json::object();
  json arts = json::object();
  for (const auto& [rel, hash] : artifacts) arts[rel] = hash;
  manifest["entries"][entry_key] = {{"config_hash", config_hash},
                                    {"artifacts", std::move(arts)},
                                    {"duration_seconds", duration_seconds}};
  write_file_atomic(path, manifest.dump(2) + "\n");
}

int classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const CheckpointError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const ContractError*>(&e)) return 5;
  return 1;
}

struct SeedOutcome {
  ArtifactList artifacts;
  std::string log;
  std::string error;
  int code = 0;
};

// Fans the per-seed body out over worker threads. Artifact lists come back in
// seed order so downstream output is independent of scheduling.
template <typename Body>
std::vector<SeedOutcome> for_each_seed(const std::vector<std::uint64_t>& seeds,
                                       const fs::path& out_dir, Body&& body) {
  std::vector<SeedOutcome> outcomes(seeds.size());
  const int n = static_cast<int>(seeds.size());
#pragma omp parallel for schedule(dynamic) num_threads(worker_threads())
  for (int i = 0; i < n; ++i) {
    auto& outcome = outcomes[static_cast<std::size_t>(i)];
    ArtifactLog log{out_dir, {}};
    try {
      body(seeds[static_cast<std::size_t>(i)], log, outcome.log);
      outcome.artifacts = std::move(log.entries);
    } catch (const std::exception& e) {
      outcome.error = e.what();
      outcome.code = classify(e);
    }
  }
  return outcomes;
}

// Throws the first failure after reporting all of them.
void finish_seeds(const std::vector<std::uint64_t>& seeds, std::vector<SeedOutcome>& outcomes,
                  ArtifactList& artifacts) {
  int first_code = 0;
  std::string first_error;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].log.empty()) std::cout << outcomes[i].log;
    if (outcomes[i].code != 0) {
      std::cerr << "seed " << seeds[i] << ": " << outcomes[i].error << "\n";
      if (first_code == 0) {
        first_code = outcomes[i].code;
        first_error = outcomes[i].error;
      }
    } else {
      artifacts.insert(artifacts.end(), outcomes[i].artifacts.begin(),
                       outcomes[i].artifacts.end());
    }
  }
  if (first_code == 2) throw ConfigError(first_error);
  if (first_code == 3) throw CheckpointError(first_error);
  if (first_code == 4) throw NumericError(first_error);
  if (first_code == 5) throw ContractError(first_error);
  if (first_code != 0) throw Error(first_error);
}

std::string curve_csv(const std::vector<ppo::CurvePoint>& curve) {
  CsvTable t;
  t.header = {"step", "episode_return", "goals_nominal", "goals_adversarial"};
  for (const auto& p : curve)
    t.rows.push_back({csv_cell(p.step), csv_cell(p.episode_return),
                      csv_cell(static_cast<long long>(p.goals_nominal)),
                      csv_cell(static_cast<long long>(p.goals_adversarial))});
  return csv_format(t);
}

std::string seed_tag(const std::string& label, std::uint64_t seed) {
  return label + "_s" + std::to_string(seed);
}

ppo::CheckpointSink interval_sink(ArtifactLog& log, const std::string& tag) {
  return [&log, tag](long long steps, const numcore::ParamSet& policy,
                     const numcore::ParamSet& value) {
    log.write(tag + "_step" + std::to_string(steps) + "_policy.ckpt",
              numcore::serialize_checkpoint(policy));
    log.write(tag + "_step" + std::to_string(steps) + "_value.ckpt",
              numcore::serialize_checkpoint(value));
  };
}

std::string final_return_summary(const std::vector<ppo::CurvePoint>& curve) {
  if (curve.empty()) return "no episodes";
  const std::size_t tail = std::min<std::size_t>(10, curve.size());
  double ret = 0.0;
  int nom = 0, adv = 0;
  for (std::size_t i = curve.size() - tail; i < curve.size(); ++i) {
    ret += curve[i].episode_return;
    nom += curve[i].goals_nominal;
    adv += curve[i].goals_adversarial;
  }
  std::ostringstream ss;
  ss << curve.size() << " episodes, last-" << tail << " mean return "
     << ret / static_cast<double>(tail) << ", goals nom/adv "
     << static_cast<double>(nom) / static_cast<double>(tail) << "/"
     << static_cast<double>(adv) / static_cast<double>(tail);
  return ss.str();
}

// ---------------------------------------------------------------------------
// Commands.

void cmd_train_nominal(const RunConfig& cfg, const fs::path& out_dir, ArtifactList& artifacts) {
  cfg.env.validate();
  cfg.ppo.validate();
  auto outcomes = for_each_seed(cfg.seeds, out_dir, [&](std::uint64_t seed, ArtifactLog& log,
                                                        std::string& report) {
    envs::NominalEnv env(cfg.env);
    ppo::Trainer trainer(cfg.ppo, env.obs_dim(), env.act_dim(), seed);
    const std::string tag = seed_tag(cfg.label, seed);
    const auto sink = interval_sink(log, tag);
    const ppo::TrainResult res =
        ppo::train(trainer, env, seed, cfg.ppo.checkpoint_interval > 0 ? sink : nullptr);
    log.write(tag + "_policy.ckpt", numcore::serialize_checkpoint(res.policy));
    log.write(tag + "_value.ckpt", numcore::serialize_checkpoint(res.value));
    log.write("curve_" + tag + ".csv", curve_csv(res.curve));
    report = "[train-nominal] seed " + std::to_string(seed) + ": " +
             final_return_summary(res.curve) + "\n";
  });
  finish_seeds(cfg.seeds, outcomes, artifacts);
}

void cmd_train_adversary(const RunConfig& cfg, const fs::path& out_dir,
                         ArtifactList& artifacts) {
  cfg.env.validate();
  cfg.ppo.validate();
  cfg.attack.validate();
  if (cfg.attack_nominal_checkpoint.empty())
    config_fail("train-adversary needs a nominal checkpoint (--nominal or attack.nominal_checkpoint)");
  auto outcomes = for_each_seed(cfg.seeds, out_dir, [&](std::uint64_t seed, ArtifactLog& log,
                                                        std::string& report) {
    const numcore::ParamSet nominal =
        numcore::load_checkpoint(substitute_seed(cfg.attack_nominal_checkpoint, seed));
    const std::string tag = seed_tag(cfg.label, seed);
    const auto sink = interval_sink(log, tag);
    const ppo::TrainResult res =
        attack::train_adversary(cfg.env, cfg.attack, cfg.ppo, nominal, seed,
                                cfg.ppo.checkpoint_interval > 0 ? sink : nullptr);
    log.write(tag + "_policy.ckpt", numcore::serialize_checkpoint(res.policy));
    log.write(tag + "_value.ckpt", numcore::serialize_checkpoint(res.value));
    log.write("curve_" + tag + ".csv", curve_csv(res.curve));
    report = "[train-adversary] seed " + std::to_string(seed) + ": " +
             final_return_summary(res.curve) + "\n";
  });
  finish_seeds(cfg.seeds, outcomes, artifacts);
}

void cmd_defend(const RunConfig& cfg, const fs::path& out_dir, ArtifactList& artifacts) {
  cfg.env.validate();
  cfg.ppo.validate();
  cfg.attack.validate();
  const defense::Scheme scheme = cfg.defense_scheme;
  if (scheme != defense::Scheme::TandemFromScratch && cfg.defense_adversary_checkpoint.empty())
    config_fail("this defense scheme needs an adversary checkpoint (--adversary)");
  if (scheme == defense::Scheme::TransferFineTune && cfg.defense_nominal_checkpoint.empty())
    config_fail("transfer fine-tuning needs a nominal checkpoint (--nominal)");

  // seed, pre, post mean extreme-action counts (transfer scheme only)
  std::vector<std::array<double, 2>> extremes(cfg.seeds.size());
  auto outcomes = for_each_seed(cfg.seeds, out_dir, [&](std::uint64_t seed, ArtifactLog& log,
                                                        std::string& report) {
    const std::string tag = seed_tag(cfg.label, seed);
    if (scheme == defense::Scheme::TandemFromScratch) {
      const defense::TandemResult res =
          defense::train_tandem(cfg.env, cfg.attack, cfg.ppo, cfg.defense_cadence, seed);
      log.write(tag + "_policy.ckpt", numcore::serialize_checkpoint(res.nominal_policy));
      log.write(tag + "_value.ckpt", numcore::serialize_checkpoint(res.nominal_value));
      log.write(tag + "_adversary_policy.ckpt",
                numcore::serialize_checkpoint(res.adversary_policy));
      log.write(tag + "_adversary_value.ckpt",
                numcore::serialize_checkpoint(res.adversary_value));
      log.write("curve_" + cfg.label + "_nominal_s" + std::to_string(seed) + ".csv",
                curve_csv(res.nominal_curve));
      log.write("curve_" + cfg.label + "_adversary_s" + std::to_string(seed) + ".csv",
                curve_csv(res.adversary_curve));
      report = "[defend tandem] seed " + std::to_string(seed) + ": nominal " +
               final_return_summary(res.nominal_curve) + "\n";
      return;
    }

    const numcore::ParamSet adversary =
        numcore::load_checkpoint(substitute_seed(cfg.defense_adversary_checkpoint, seed));
    if (scheme == defense::Scheme::FixedAdvFromScratch) {
      const ppo::TrainResult res = defense::train_vs_fixed_adversary(
          cfg.env, cfg.attack, cfg.ppo, adversary, seed);
      log.write(tag + "_policy.ckpt", numcore::serialize_checkpoint(res.policy));
      log.write(tag + "_value.ckpt", numcore::serialize_checkpoint(res.value));
      log.write("curve_" + tag + ".csv", curve_csv(res.curve));
      report = "[defend fixed-adv] seed " + std::to_string(seed) + ": " +
               final_return_summary(res.curve) + "\n";
      return;
    }

    const std::string policy_path =
        substitute_seed(cfg.defense_nominal_checkpoint, seed);
    numcore::ParamSet nominal_policy = numcore::load_checkpoint(policy_path);
    numcore::ParamSet nominal_value = numcore::load_checkpoint(value_path_for(policy_path));
    const defense::FineTuneResult res = defense::train_transfer_finetune(
        cfg.env, cfg.attack, cfg.ppo, std::move(nominal_policy), std::move(nominal_value),
        adversary, seed);
    log.write(tag + "_policy.ckpt", numcore::serialize_checkpoint(res.train.policy));
    log.write(tag + "_value.ckpt", numcore::serialize_checkpoint(res.train.value));
    log.write("curve_" + tag + ".csv", curve_csv(res.train.curve));
    const auto idx = static_cast<std::size_t>(
        std::find(cfg.seeds.begin(), cfg.seeds.end(), seed) - cfg.seeds.begin());
    extremes[idx] = {res.extreme_before, res.extreme_after};
    report = "[defend transfer] seed " + std::to_string(seed) + ": " +
             final_return_summary(res.train.curve) + ", extreme " +
             csv_cell(res.extreme_before) + " -> " + csv_cell(res.extreme_after) + "\n";
  });
  finish_seeds(cfg.seeds, outcomes, artifacts);

  if (scheme == defense::Scheme::TransferFineTune) {
    CsvTable t;
    t.header = {"seed", "phase", "mean_extreme_actions"};
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      t.rows.push_back({std::to_string(cfg.seeds[i]), "pre", csv_cell(extremes[i][0])});
      t.rows.push_back({std::to_string(cfg.seeds[i]), "post", csv_cell(extremes[i][1])});
    }
    const std::string content = csv_format(t);
    const std::string rel = "extreme_" + cfg.label + ".csv";
    write_file_atomic(out_dir / rel, content);
    artifacts.emplace_back(rel, git_blob_hash(content));
  }
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

template <typename Get>
MeanStd pooled_stat(const std::vector<eval::EpisodeResult>& rows, Get get) {
  MeanStd out;
  if (rows.empty()) return out;
  for (const auto& r : rows) out.mean += get(r);
  out.mean /= static_cast<double>(rows.size());
  if (rows.size() > 1) {
    double ss = 0.0;
    for (const auto& r : rows) {
      const double d = get(r) - out.mean;
      ss += d * d;
    }
    out.std = std::sqrt(ss / static_cast<double>(rows.size() - 1));
  }
  return out;
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& out_dir, ArtifactList& artifacts) {
  cfg.env.validate();
  if (cfg.eval_nominal_checkpoint.empty())
    config_fail("evaluate needs a nominal checkpoint (--nominal or eval.nominal_checkpoint)");
  const bool attack_on = !cfg.eval_adversary_checkpoint.empty();

  // per seed, per separation
  std::vector<std::vector<eval::EvalReport>> reports(cfg.seeds.size());
  auto outcomes = for_each_seed(cfg.seeds, out_dir, [&](std::uint64_t seed, ArtifactLog& log,
                                                        std::string& report_line) {
    const numcore::ParamSet nominal =
        numcore::load_checkpoint(substitute_seed(cfg.eval_nominal_checkpoint, seed));
    numcore::ParamSet adversary;
    eval::EvalSubject subject;
    subject.nominal = &nominal;
    subject.attack_cfg = cfg.attack;
    if (attack_on) {
      adversary =
          numcore::load_checkpoint(substitute_seed(cfg.eval_adversary_checkpoint, seed));
      subject.adversary = &adversary;
    }

    CsvTable t;
    t.header = {"separation",    "episode",        "nominal_goals",
                "adversarial_goals", "extreme_actions", "nominal_return",
                "adversarial_return"};
    const auto idx = static_cast<std::size_t>(
        std::find(cfg.seeds.begin(), cfg.seeds.end(), seed) - cfg.seeds.begin());
    for (double sep : cfg.eval_separations) {
      eval::EvalScenario scenario;
      scenario.min_goal_separation = sep;
      scenario.episodes = cfg.eval_episodes;
      scenario.steps_per_episode = cfg.eval_steps;
      scenario.attack_enabled = attack_on;
      scenario.extreme_threshold = cfg.eval_extreme_threshold;
      const eval::EvalReport rep = eval::evaluate(cfg.env, scenario, subject, seed);
      reports[idx].push_back(rep);
      for (std::size_t e = 0; e < rep.episodes.size(); ++e) {
        const auto& ep = rep.episodes[e];
        t.rows.push_back({csv_cell(sep), csv_cell(static_cast<long long>(e)),
                          csv_cell(static_cast<long long>(ep.nominal_goals)),
                          csv_cell(static_cast<long long>(ep.adversarial_goals)),
                          csv_cell(static_cast<long long>(ep.extreme_actions)),
                          csv_cell(ep.nominal_return), csv_cell(ep.adversarial_return)});
      }
    }
    log.write("eval_" + seed_tag(cfg.label, seed) + ".csv", csv_format(t));
    report_line = "[evaluate] seed " + std::to_string(seed) + " done\n";
  });
  finish_seeds(cfg.seeds, outcomes, artifacts);

  // Pool episodes across seeds per separation for the table.
  std::ostringstream table;
  table << "evaluation '" << cfg.label << "': " << cfg.seeds.size() << " seed(s) x "
        << cfg.eval_episodes << " episodes x " << cfg.eval_steps << " steps, attack "
        << (attack_on ? "on" : "off") << "\n";
  table << "separation | nominal goals/ep | adversarial goals/ep | extreme acts/ep\n";
  for (std::size_t s = 0; s < cfg.eval_separations.size(); ++s) {
    std::vector<eval::EpisodeResult> pooled;
    for (const auto& per_seed : reports)
      if (s < per_seed.size())
        pooled.insert(pooled.end(), per_seed[s].episodes.begin(), per_seed[s].episodes.end());
    const auto ng = pooled_stat(pooled, [](const eval::EpisodeResult& r) {
      return static_cast<double>(r.nominal_goals);
    });
    const auto ag = pooled_stat(pooled, [](const eval::EpisodeResult& r) {
      return static_cast<double>(r.adversarial_goals);
    });
    const auto ex = pooled_stat(pooled, [](const eval::EpisodeResult& r) {
      return static_cast<double>(r.extreme_actions);
    });
    char line[160];
    std::snprintf(line, sizeof line, "%10.2f | %7.2f +- %-5.2f | %9.2f +- %-7.2f | %8.1f\n",
                  cfg.eval_separations[s], ng.mean, ng.std, ag.mean, ag.std, ex.mean);
    table << line;
  }
  const std::string summary = table.str();
  std::cout << summary;
  const std::string rel = "eval_" + cfg.label + "_summary.txt";
  write_file_atomic(out_dir / rel, summary);
  artifacts.emplace_back(rel, git_blob_hash(summary));
}

// ---------------------------------------------------------------------------
// analyze: post-hoc plots and tables from the CSVs in a run directory.

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// eval_<label>_s<seed>.csv -> seed, for a fixed label; -1 on mismatch.
long long eval_seed_of(const std::string& name, const std::string& label) {
  const std::string prefix = "eval_" + label + "_s";
  if (!starts_with(name, prefix) || !ends_with(name, ".csv")) return -1;
  const std::string mid = name.substr(prefix.size(), name.size() - prefix.size() - 4);
  if (mid.empty() || mid.find_first_not_of("0123456789") != std::string::npos) return -1;
  return std::stoll(mid);
}

std::vector<eval::EpisodeResult> episodes_from_csv(const CsvTable& t) {
  std::vector<eval::EpisodeResult> rows;
  const auto c_ng = csv_column(t, "nominal_goals");
  const auto c_ag = csv_column(t, "adversarial_goals");
  const auto c_ex = csv_column(t, "extreme_actions");
  const auto c_nr = csv_column(t, "nominal_return");
  const auto c_ar = csv_column(t, "adversarial_return");
  for (const auto& r : t.rows) {
    eval::EpisodeResult ep;
    ep.nominal_goals = static_cast<int>(csv_number(r[c_ng]));
    ep.adversarial_goals = static_cast<int>(csv_number(r[c_ag]));
    ep.extreme_actions = static_cast<int>(csv_number(r[c_ex]));
    ep.nominal_return = csv_number(r[c_nr]);
    ep.adversarial_return = csv_number(r[c_ar]);
    rows.push_back(ep);
  }
  return rows;
}

/// Seed-keyed per-episode data for every eval CSV with the given label.
std::map<long long, std::vector<eval::EpisodeResult>> collect_eval_files(
    const fs::path& dir, const std::string& label) {
  std::map<long long, std::vector<eval::EpisodeResult>> by_seed;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const long long seed = eval_seed_of(name, label);
    if (seed < 0) continue;
    by_seed[seed] = episodes_from_csv(csv_parse(read_file(entry.path())));
  }
  return by_seed;
}

eval::EvalReport report_from_rows(long long seed,
                                  const std::vector<eval::EpisodeResult>& rows) {
  eval::EvalReport rep;
  rep.seed = static_cast<std::uint64_t>(seed);
  rep.episodes = rows;
  return rep;
}

void cmd_analyze(const fs::path& dir, ArtifactList& artifacts) {
  if (!fs::is_directory(dir)) config_fail("analyze: not a directory: " + dir.string());
  std::ostringstream notes;

  // Reward-curve plots.
  std::vector<std::string> curve_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (starts_with(name, "curve_") && ends_with(name, ".csv")) curve_files.push_back(name);
  }
  std::sort(curve_files.begin(), curve_files.end());
  for (const std::string& name : curve_files) {
    const CsvTable t = csv_parse(read_file(dir / name));
    const auto c_step = csv_column(t, "step");
    const auto c_ret = csv_column(t, "episode_return");
    SvgSeries series{"episode return", {}};
    for (const auto& r : t.rows)
      series.points.emplace_back(csv_number(r[c_step]), csv_number(r[c_ret]));
    const std::string stem = name.substr(0, name.size() - 4);
    const std::string svg =
        svg_line_chart(stem, "environment steps", "episode return", {series});
    write_file_atomic(dir / (stem + ".svg"), svg);
    artifacts.emplace_back(stem + ".svg", git_blob_hash(svg));
  }
  notes << "curves plotted: " << curve_files.size() << "\n";

  // Robustness scatter: clean extreme-action counts vs attacked adversarial
  // reward, matched by seed.
  const auto clean = collect_eval_files(dir, "clean");
  const auto attacked = collect_eval_files(dir, "attacked");
  std::vector<std::pair<double, double>> pairs;
  CsvTable scatter;
  scatter.header = {"seed", "extreme_actions_per_episode", "adversarial_return_per_episode"};
  for (const auto& [seed, clean_rows] : clean) {
    const auto it = attacked.find(seed);
    if (it == attacked.end() || clean_rows.empty() || it->second.empty()) continue;
    const double extreme = pooled_stat(clean_rows, [](const eval::EpisodeResult& r) {
                             return static_cast<double>(r.extreme_actions);
                           }).mean;
    const double adv_ret = pooled_stat(it->second, [](const eval::EpisodeResult& r) {
                             return r.adversarial_return;
                           }).mean;
    pairs.emplace_back(extreme, adv_ret);
    scatter.rows.push_back({std::to_string(seed), csv_cell(extreme), csv_cell(adv_ret)});
  }
  if (!pairs.empty()) {
    const std::string csv = csv_format(scatter);
    write_file_atomic(dir / "scatter_robustness.csv", csv);
    artifacts.emplace_back("scatter_robustness.csv", git_blob_hash(csv));
    const std::string svg =
        svg_scatter("extreme actions vs adversarial reward", "extreme actions per episode",
                    "adversarial return per episode", pairs);
    write_file_atomic(dir / "scatter_robustness.svg", svg);
    artifacts.emplace_back("scatter_robustness.svg", git_blob_hash(svg));
  }
  if (pairs.size() >= 5) {
    const double rho = eval::robustness_correlation(pairs);
    notes << "robustness pairs: " << pairs.size() << ", spearman_rho: " << csv_cell(rho)
          << "\n";
  } else {
    notes << "robustness pairs: " << pairs.size() << " (need 5 for a correlation)\n";
  }

  // Defense four-cell table, if pre/post evaluations are present.
  const auto pre_clean = collect_eval_files(dir, "predef_clean");
  const auto pre_attacked = collect_eval_files(dir, "predef_attacked");
  const auto post_clean = collect_eval_files(dir, "postdef_clean");
  const auto post_attacked = collect_eval_files(dir, "postdef_attacked");
  std::vector<long long> def_seeds;
  for (const auto& [seed, rows] : pre_clean)
    if (pre_attacked.count(seed) && post_clean.count(seed) && post_attacked.count(seed))
      def_seeds.push_back(seed);
  if (!def_seeds.empty()) {
    std::vector<eval::EvalReport> a, b, c, d;
    for (long long seed : def_seeds) {
      a.push_back(report_from_rows(seed, pre_clean.at(seed)));
      b.push_back(report_from_rows(seed, pre_attacked.at(seed)));
      c.push_back(report_from_rows(seed, post_clean.at(seed)));
      d.push_back(report_from_rows(seed, post_attacked.at(seed)));
    }
    const eval::DefenseTable table = eval::defense_report(a, b, c, d);
    std::ostringstream out;
    out << "defense comparison over " << def_seeds.size() << " seed(s)\n";
    auto cell = [&out](const char* name, const eval::DefenseCell& cl) {
      char line[160];
      std::snprintf(line, sizeof line,
                    "%-22s nominal %6.2f +- %-5.2f  adversarial %6.2f +- %-5.2f\n", name,
                    cl.nominal_goals_mean, cl.nominal_goals_std, cl.adversarial_goals_mean,
                    cl.adversarial_goals_std);
      out << line;
    };
    cell("undefended, no attack", table.undefended_no_attack);
    cell("undefended, attack", table.undefended_attack);
    cell("defended, no attack", table.defended_no_attack);
    cell("defended, attack", table.defended_attack);
    out << "adversarial goal reduction: " << csv_cell(100.0 * table.adversarial_reduction)
        << "%\n";
    out << "nominal goal retention: " << csv_cell(100.0 * table.nominal_retention) << "%\n";
    const std::string text = out.str();
    write_file_atomic(dir / "defense_table.txt", text);
    artifacts.emplace_back("defense_table.txt", git_blob_hash(text));
    notes << "defense table seeds: " << def_seeds.size() << ", reduction: "
          << csv_cell(100.0 * table.adversarial_reduction) << "%, retention: "
          << csv_cell(100.0 * table.nominal_retention) << "%\n";
    std::cout << text;
  }

  const std::string analysis = notes.str();
  std::cout << analysis;
  write_file_atomic(dir / "analysis.txt", analysis);
  artifacts.emplace_back("analysis.txt", git_blob_hash(analysis));
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"adversarial-robustness workbench for 2D navigation policies"};
  app.require_subcommand(1);

  std::string config_path, seeds_str, out_str, env_str, variant_str, scheme_str, dg_str;
  std::string label_str, nominal_str, adversary_str, analyze_dir;
  long long steps = -1;
  int episodes = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seeds", seeds_str, "seed list, e.g. 0..4 or 0,50,120");
    cmd->add_option("--out", out_str, "output directory (default runs/<label>)");
    cmd->add_option("--label", label_str, "run label used in file names");
    cmd->add_option("--env", env_str, "environment kind")
        ->check(CLI::IsMember({"point", "car"}));
    cmd->add_option("--steps", steps, "training steps per seed");
  };

  CLI::App* train_nominal = app.add_subcommand("train-nominal", "train navigation policies");
  add_common(train_nominal);

  CLI::App* train_adversary =
      app.add_subcommand("train-adversary", "train attack policies against a frozen victim");
  add_common(train_adversary);
  train_adversary->add_option("--nominal", nominal_str,
                              "victim policy checkpoint ({seed} substituted)");
  train_adversary->add_option("--variant", variant_str, "adversary observation variant")
      ->check(CLI::IsMember({"state-aware", "state-unaware"}));

  CLI::App* defend = app.add_subcommand("defend", "adversarial training schemes");
  add_common(defend);
  defend->add_option("--scheme", scheme_str, "defense scheme")
      ->check(CLI::IsMember({"tandem", "fixed-adv", "transfer"}));
  defend->add_option("--nominal", nominal_str, "nominal policy checkpoint (transfer scheme)");
  defend->add_option("--adversary", adversary_str, "frozen adversary checkpoint");
  defend->add_option("--variant", variant_str, "adversary observation variant")
      ->check(CLI::IsMember({"state-aware", "state-unaware"}));

  CLI::App* evaluate = app.add_subcommand("evaluate", "goal-separation evaluation protocol");
  add_common(evaluate);
  evaluate->add_option("--nominal", nominal_str, "policy checkpoint to evaluate");
  evaluate->add_option("--adversary", adversary_str,
                       "adversary checkpoint (enables the attack)");
  evaluate->add_option("--variant", variant_str, "adversary observation variant")
      ->check(CLI::IsMember({"state-aware", "state-unaware"}));
  evaluate->add_option("--dg", dg_str, "goal separations, e.g. 0.5,1.0,1.5");
  evaluate->add_option("--episodes", episodes, "episodes per scenario");

  CLI::App* analyze = app.add_subcommand("analyze", "plots and tables from a run directory");
  analyze->add_option("dir", analyze_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_config(read_file(config_path));
    if (!label_str.empty()) cfg.label = label_str;
    if (!seeds_str.empty()) cfg.seeds = parse_seed_list(seeds_str);
    if (!env_str.empty()) cfg.env.kind = parse_kind(env_str);
    if (steps >= 0) cfg.ppo.total_steps = steps;
    if (!variant_str.empty()) cfg.attack.variant = parse_variant(variant_str);
    if (!scheme_str.empty()) cfg.defense_scheme = parse_scheme(scheme_str);
    if (!dg_str.empty()) cfg.eval_separations = parse_separation_list(dg_str);
    if (episodes > 0) cfg.eval_episodes = episodes;
    if (!nominal_str.empty()) {
      cfg.attack_nominal_checkpoint = nominal_str;
      cfg.defense_nominal_checkpoint = nominal_str;
      cfg.eval_nominal_checkpoint = nominal_str;
    }
    if (!adversary_str.empty()) {
      cfg.defense_adversary_checkpoint = adversary_str;
      cfg.eval_adversary_checkpoint = adversary_str;
    }
    if (cfg.seeds.empty()) config_fail("empty seed list");

    if (analyze->parsed()) {
      ArtifactList artifacts;
      cmd_analyze(analyze_dir, artifacts);
      const double duration =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      update_manifest(analyze_dir, "analyze:" + fs::path(analyze_dir).filename().string(),
                      git_blob_hash("analyze"), artifacts, duration);
      return 0;
    }

    const fs::path out_dir = out_str.empty() ? fs::path("runs") / cfg.label : fs::path(out_str);
    fs::create_directories(out_dir);

    const std::string resolved = dump_config(cfg);
    const std::string config_hash = git_blob_hash(resolved);
    ArtifactList artifacts;
    write_file_atomic(out_dir / "config.json", resolved);
    artifacts.emplace_back("config.json", config_hash);

    std::string entry_key;
    if (train_nominal->parsed()) {
      entry_key = "train-nominal:" + cfg.label;
      cmd_train_nominal(cfg, out_dir, artifacts);
    } else if (train_adversary->parsed()) {
      entry_key = "train-adversary:" + cfg.label;
      cmd_train_adversary(cfg, out_dir, artifacts);
    } else if (defend->parsed()) {
      entry_key = "defend:" + cfg.label;
      cmd_defend(cfg, out_dir, artifacts);
    } else if (evaluate->parsed()) {
      entry_key = "evaluate:" + cfg.label;
      cmd_evaluate(cfg, out_dir, artifacts);
    } else {
      config_fail("no command given");
    }

    const double duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    update_manifest(out_dir, entry_key, config_hash, artifacts, duration);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  }
}

}  // namespace artrd::cli
