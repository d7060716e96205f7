#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "artrd/cli.hpp"
#include "artrd/sha1.hpp"

using namespace artrd;
namespace fs = std::filesystem;

namespace {

int run_cmd(const std::string& args) {
  const std::string cmd = std::string(ARTRD_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kTinyConfig = R"({
  "label": "tiny",
  "seeds": [0, 1],
  "env": {"max_steps": 256},
  "ppo": {"total_steps": 1024, "update_interval": 512, "batch_size": 128,
          "epochs_per_update": 2, "policy_hidden": [8], "value_hidden": [8]}
})";

}  // namespace

TEST_CASE("config documents round trip through dump and parse") {
  cli::RunConfig cfg = cli::parse_config(kTinyConfig);
  CHECK(cfg.label == "tiny");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1});
  CHECK(cfg.env.max_steps == 256);
  CHECK(cfg.ppo.total_steps == 1024);
  CHECK(cfg.ppo.policy_hidden == std::vector<int>{8});
  // Untouched fields keep their defaults.
  CHECK(cfg.env.arena_half_width == 3.0);
  CHECK(cfg.eval_episodes == 10);

  const std::string dumped = cli::dump_config(cfg);
  const cli::RunConfig again = cli::parse_config(dumped);
  CHECK(cli::dump_config(again) == dumped);
}

TEST_CASE("unknown and ill-typed config keys are rejected") {
  CHECK_THROWS_AS(cli::parse_config("{\"label\": \"x\", \"bogus\": 1}"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("{\"env\": {\"max_stepz\": 10}}"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("{\"ppo\": {\"lr\": \"fast\"}}"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("{\"env\": {\"kind\": \"boat\"}}"), ConfigError);
  CHECK_THROWS_AS(cli::parse_config("not json"), ConfigError);
  CHECK_NOTHROW(cli::parse_config("{}"));
}

TEST_CASE("seed lists accept ranges and enumerations") {
  CHECK(cli::parse_seed_list("0..4") == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(cli::parse_seed_list("0,50,120") == std::vector<std::uint64_t>{0, 50, 120});
  CHECK(cli::parse_seed_list("1..3,7") == std::vector<std::uint64_t>{1, 2, 3, 7});
  CHECK_THROWS_AS(cli::parse_seed_list("5..2"), ConfigError);
  CHECK_THROWS_AS(cli::parse_seed_list("abc"), ConfigError);
  CHECK_THROWS_AS(cli::parse_seed_list(""), ConfigError);
  CHECK(cli::parse_separation_list("0.5,1.0,1.5") == std::vector<double>{0.5, 1.0, 1.5});
  CHECK_THROWS_AS(cli::parse_separation_list("wide"), ConfigError);
}

TEST_CASE("checkpoint path helpers") {
  CHECK(cli::substitute_seed("adv_{seed}_policy.ckpt", 9) == "adv_9_policy.ckpt");
  CHECK(cli::substitute_seed("plain.ckpt", 9) == "plain.ckpt");
  CHECK(cli::substitute_seed("{seed}/{seed}.ckpt", 2) == "2/2.ckpt");
  CHECK(cli::value_path_for("runs/x/tiny_s0_policy.ckpt") == "runs/x/tiny_s0_value.ckpt");
  CHECK_THROWS_AS(cli::value_path_for("runs/x/tiny.bin"), ConfigError);
}

TEST_CASE("help and argument errors map to the documented exit codes") {
  CHECK(run_cmd("--help") == 0);
  CHECK(run_cmd("train-nominal --bogus-flag") == 2);
  CHECK(run_cmd("") == 2);  // a subcommand is required
}

TEST_CASE("bad config files exit with the config code") {
  const fs::path dir = fresh_dir("artrd_cli_badcfg");
  write_file_atomic(dir / "bad.json", "{\"env\": {\"nope\": 1}}");
  CHECK(run_cmd("train-nominal --config " + (dir / "bad.json").string() + " --out " +
                (dir / "out").string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("missing checkpoints exit with the checkpoint code") {
  const fs::path dir = fresh_dir("artrd_cli_missing");
  CHECK(run_cmd("evaluate --nominal " + (dir / "absent_policy.ckpt").string() + " --out " +
                (dir / "out").string() + " --episodes 1") == 3);
  fs::remove_all(dir);
}

TEST_CASE("training runs write checkpoints, curves and a manifest") {
  const fs::path dir = fresh_dir("artrd_cli_train");
  write_file_atomic(dir / "cfg.json", kTinyConfig);
  const std::string out = (dir / "out").string();
  REQUIRE(run_cmd("train-nominal --config " + (dir / "cfg.json").string() + " --out " + out) ==
          0);

  for (const char* name :
       {"config.json", "tiny_s0_policy.ckpt", "tiny_s0_value.ckpt", "curve_tiny_s0.csv",
        "tiny_s1_policy.ckpt", "tiny_s1_value.ckpt", "curve_tiny_s1.csv", "manifest.json"})
    CHECK(fs::exists(dir / "out" / name));

  const auto manifest = nlohmann::json::parse(read_file(dir / "out" / "manifest.json"));
  REQUIRE(manifest.contains("entries"));
  const auto& entry = manifest["entries"]["train-nominal:tiny"];
  REQUIRE(entry.contains("artifacts"));
  const std::string hash = entry["artifacts"]["tiny_s0_policy.ckpt"];
  CHECK(hash == git_blob_hash(read_file(dir / "out" / "tiny_s0_policy.ckpt")));
  CHECK(entry["config_hash"] ==
        git_blob_hash(read_file(dir / "out" / "config.json")));

  // The dumped config reproduces the run when fed back in.
  const cli::RunConfig resolved = cli::parse_config(read_file(dir / "out" / "config.json"));
  CHECK(resolved.ppo.total_steps == 1024);
  fs::remove_all(dir);
}

TEST_CASE("identical runs produce identical artifact hashes") {
  const fs::path dir = fresh_dir("artrd_cli_repro");
  write_file_atomic(dir / "cfg.json", kTinyConfig);
  REQUIRE(run_cmd("train-nominal --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "a").string()) == 0);
  REQUIRE(run_cmd("train-nominal --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "b").string()) == 0);
  const auto ma = nlohmann::json::parse(read_file(dir / "a" / "manifest.json"));
  const auto mb = nlohmann::json::parse(read_file(dir / "b" / "manifest.json"));
  CHECK(ma["entries"]["train-nominal:tiny"]["artifacts"] ==
        mb["entries"]["train-nominal:tiny"]["artifacts"]);
  CHECK(ma["entries"]["train-nominal:tiny"]["config_hash"] ==
        mb["entries"]["train-nominal:tiny"]["config_hash"]);
  fs::remove_all(dir);
}

TEST_CASE("evaluate and analyze complete the artifact flow") {
  const fs::path dir = fresh_dir("artrd_cli_flow");
  write_file_atomic(dir / "cfg.json", kTinyConfig);
  const std::string out = (dir / "out").string();
  REQUIRE(run_cmd("train-nominal --config " + (dir / "cfg.json").string() + " --out " + out) ==
          0);

  REQUIRE(run_cmd("evaluate --nominal " + out + "/tiny_s{seed}_policy.ckpt --seeds 0,1" +
                  " --label clean --dg 0.5 --episodes 2 --out " + out) == 0);
  CHECK(fs::exists(dir / "out" / "eval_clean_s0.csv"));
  CHECK(fs::exists(dir / "out" / "eval_clean_s1.csv"));
  CHECK(fs::exists(dir / "out" / "eval_clean_summary.txt"));

  REQUIRE(run_cmd("analyze " + out) == 0);
  CHECK(fs::exists(dir / "out" / "curve_tiny_s0.svg"));
  CHECK(fs::exists(dir / "out" / "analysis.txt"));

  const auto manifest = nlohmann::json::parse(read_file(dir / "out" / "manifest.json"));
  CHECK(manifest["entries"].contains("train-nominal:tiny"));
  CHECK(manifest["entries"].contains("evaluate:clean"));
  CHECK(manifest["entries"].contains("analyze:out"));
  fs::remove_all(dir);
}

TEST_CASE("adversary training needs a victim checkpoint") {
  const fs::path dir = fresh_dir("artrd_cli_adv");
  CHECK(run_cmd("train-adversary --steps 256 --out " + (dir / "out").string()) == 2);
  fs::remove_all(dir);
}
