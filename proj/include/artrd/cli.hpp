#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "artrd/attack.hpp"
#include "artrd/defense.hpp"
#include "artrd/envs.hpp"
#include "artrd/ppo.hpp"

namespace artrd::cli {

inline constexpr const char* kToolVersion = "artrd 0.1.0";

// Everything a run needs, resolvable from defaults + config file + flags.
// Checkpoint paths may contain a "{seed}" placeholder.
struct RunConfig {
  std::string label = "run";
  std::vector<std::uint64_t> seeds = {0};

  envs::EnvConfig env;
  ppo::PpoConfig ppo;

  attack::AttackConfig attack;
  std::string attack_nominal_checkpoint;

  defense::Scheme defense_scheme = defense::Scheme::TransferFineTune;
  int defense_cadence = 1;
  std::string defense_nominal_checkpoint;
  std::string defense_adversary_checkpoint;

  std::vector<double> eval_separations = {0.5, 1.0, 1.5};
  int eval_episodes = 10;
  int eval_steps = 1000;
  double eval_extreme_threshold = 0.999;
  std::string eval_nominal_checkpoint;
  std::string eval_adversary_checkpoint;  // empty disables the attack
};

/// Parse a config document, rejecting unknown keys. Starts from defaults.
RunConfig parse_config(const std::string& json_text);

/// Fully-resolved config as the canonical JSON document; parse_config on the
/// result reproduces the same config.
std::string dump_config(const RunConfig& cfg);

/// "0..4" and "0,50,120" forms, mixable.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<double> parse_separation_list(const std::string& text);

/// Replace a "{seed}" placeholder if present.
std::string substitute_seed(const std::string& path_template, std::uint64_t seed);

/// Companion value-network path for a "..._policy.ckpt" path.
std::string value_path_for(const std::string& policy_path);

/// Full command-line surface; returns the process exit code (0 success,
/// 2 config, 3 checkpoint, 4 numeric, 5 contract, 1 other).
int run_cli(int argc, const char* const* argv);

}  // namespace artrd::cli
