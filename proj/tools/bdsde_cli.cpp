// Experiment driver on top of the public C interface.
#include <bdsde/bdsde.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

namespace {

struct ConfigCli {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string problem;
  std::string out_dir = "out";
  int64_t seed = -1;
  int64_t threads = -1;
};

void add_config_options(CLI::App* cmd, ConfigCli& cli) {
  cmd->add_option("-c,--config", cli.config_path, "JSON config file");
  cmd->add_option("-s,--set", cli.overrides,
                  "override a config key, dotted path: --set solver.samples=4000");
  cmd->add_option("-p,--problem", cli.problem,
                  "problem name: linear, finance-g1, finance-g2, finance-g3");
  cmd->add_option("-o,--out", cli.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", cli.seed, "master seed (overrides config)");
  cmd->add_option("--threads", cli.threads, "worker threads, 0 = hardware");
}

int fail(bdsde_status status, const char* stage) {
  // messages from the library often already carry the stage name
  const std::string message = bdsde_last_error();
  if (message.rfind(std::string(stage) + ":", 0) == 0)
    std::fprintf(stderr, "bdsde: %s\n", message.c_str());
  else
    std::fprintf(stderr, "bdsde: %s: %s\n", stage, message.c_str());
  return static_cast<int>(status);
}

int build_config(const ConfigCli& cli, const char* forced_mode, bdsde_config** out) {
  bdsde_status status;
  if (cli.config_path.empty()) {
    status = bdsde_config_create(out);
  } else {
    status = bdsde_config_load_file(cli.config_path.c_str(), out);
  }
  if (status != BDSDE_OK) return fail(status, "config");

  for (const std::string& entry : cli.overrides) {
    auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "bdsde: --set expects key=value, got '%s'\n", entry.c_str());
      bdsde_config_destroy(*out);
      return static_cast<int>(BDSDE_ERR_INVALID_ARGUMENT);
    }
    std::string key = entry.substr(0, eq);
    std::string value = entry.substr(eq + 1);
    status = bdsde_config_set(*out, key.c_str(), value.c_str());
    if (status != BDSDE_OK) {
      bdsde_config_destroy(*out);
      return fail(status, "config");
    }
  }

  // dedicated flags take precedence over --set and the file
  auto set_or_fail = [&](const char* key, const std::string& value) -> int {
    status = bdsde_config_set(*out, key, value.c_str());
    if (status != BDSDE_OK) {
      bdsde_config_destroy(*out);
      return fail(status, "config");
    }
    return 0;
  };
  if (!cli.problem.empty())
    if (int rc = set_or_fail("problem.name", cli.problem)) return rc;
  if (cli.seed >= 0)
    if (int rc = set_or_fail("seed", std::to_string(cli.seed))) return rc;
  if (cli.threads >= 0)
    if (int rc = set_or_fail("threads", std::to_string(cli.threads))) return rc;
  if (forced_mode)
    if (int rc = set_or_fail("mode", forced_mode)) return rc;
  return 0;
}

int run_verb(const ConfigCli& cli, const char* forced_mode, bool compare) {
  bdsde_config* config = nullptr;
  if (int rc = build_config(cli, forced_mode, &config)) return rc;
  bdsde_status status = compare ? bdsde_compare_bsde(config, cli.out_dir.c_str())
                                : bdsde_run_experiment(config, cli.out_dir.c_str());
  bdsde_config_destroy(config);
  if (status != BDSDE_OK) return fail(status, compare ? "compare-bsde" : "run");
  std::printf("wrote %s/manifest.json\n", cli.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo solver for backward doubly-stochastic systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bdsde_version()));

  ConfigCli run_cli;
  CLI::App* run = app.add_subcommand("run", "run the configured experiment");
  add_config_options(run, run_cli);

  ConfigCli sched_cli;
  CLI::App* sched =
      app.add_subcommand("schedule", "run the refinement schedule j = 1..j_max");
  add_config_options(sched, sched_cli);

  ConfigCli cmp_cli;
  CLI::App* cmp = app.add_subcommand(
      "compare-bsde", "run a finance problem with and without the backward noise term");
  add_config_options(cmp, cmp_cli);

  std::string manifest_path;
  std::string replay_out = "replay_out";
  CLI::App* rep = app.add_subcommand("replay", "re-run the experiment from a manifest");
  rep->add_option("manifest", manifest_path, "manifest.json from a previous run")->required();
  rep->add_option("-o,--out", replay_out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return run_verb(run_cli, nullptr, false);
  if (sched->parsed()) return run_verb(sched_cli, "schedule", false);
  if (cmp->parsed()) return run_verb(cmp_cli, nullptr, true);
  if (rep->parsed()) {
    bdsde_status status = bdsde_replay(manifest_path.c_str(), replay_out.c_str());
    if (status != BDSDE_OK) return fail(status, "replay");
    std::printf("wrote %s/manifest.json\n", replay_out.c_str());
    return 0;
  }
  return 0;
}
