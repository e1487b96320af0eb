#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <svosim/runner.hpp>
#include <svosim/version.hpp>

namespace {

// exit codes: 0 ok, 2 configuration, 3 runtime, 4 integrity
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIntegrity = 4;

struct CommonOverrides {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
  bool no_deterministic = false;
  int threads = 0;
  int rounds = -1;
  bool dry_run = false;
};

void apply_overrides(svosim::RunConfig& c, const CommonOverrides& o) {
  if (o.seed_set) c.seed = o.seed;
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (o.deterministic) c.deterministic = true;
  if (o.no_deterministic) c.deterministic = false;
  if (o.threads > 0) c.threads = o.threads;
  if (o.rounds >= 0) c.rounds = o.rounds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixed-motive gridworld simulation and training harness"};
  app.set_version_flag("--version", svosim::kVersion);
  app.require_subcommand(1);

  CommonOverrides train_o;
  CLI::App* train = app.add_subcommand("train", "train a population on one configuration");
  train->add_option("--config", train_o.config_path, "run config (json)")->required();
  train->add_option("--out", train_o.out_dir, "override out_dir");
  train->add_option("--seed", train_o.seed, "override master seed")
      ->each([&](const std::string&) { train_o.seed_set = true; });
  train->add_option("--rounds", train_o.rounds, "override training rounds");
  train->add_option("--threads", train_o.threads, "override worker threads");
  train->add_flag("--deterministic", train_o.deterministic, "force single-threaded arenas");
  train->add_flag("--no-deterministic", train_o.no_deterministic, "allow threaded arenas");
  train->add_flag("--dry-run", train_o.dry_run, "print the plan without running");

  CommonOverrides eval_o;
  svosim::EvalOptions eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "evaluate checkpointed or scripted policies");
  eval->add_option("--config", eval_o.config_path, "run config (json)")->required();
  eval->add_option("--checkpoint", eval_opts.checkpoint_dir,
                   "checkpoint directory with manifest.json");
  eval->add_option("--policy-kind", eval_opts.policy_kind,
                   "scripted policy: random, greedy-harvester, sustainable-harvester, "
                   "dedicated-cleaner");
  eval->add_option("--episodes", eval_opts.episodes, "override episode count");
  eval->add_option("--out", eval_opts.out_dir, "output directory for eval artifacts");
  eval->add_option("--seed", eval_o.seed, "override master seed")
      ->each([&](const std::string&) { eval_o.seed_set = true; });
  eval->add_flag("--dry-run", eval_opts.dry_run, "print the plan without running");

  CommonOverrides sweep_o;
  CLI::App* sweep = app.add_subcommand("sweep", "train every cell of a parameter grid");
  sweep->add_option("--config", sweep_o.config_path, "sweep spec (json)")->required();
  sweep->add_option("--out", sweep_o.out_dir, "override the sweep root out_dir");
  sweep->add_flag("--dry-run", sweep_o.dry_run, "enumerate the grid without running");

  std::string replay_log, replay_config, replay_out;
  CLI::App* replay = app.add_subcommand("replay", "re-simulate and verify a recorded episode");
  replay->add_option("--log", replay_log, "recorded episode (.svrp)")->required();
  replay->add_option("--config", replay_config, "run config the episode was recorded under")
      ->required();
  replay->add_option("--out", replay_out, "write the step trace (jsonl) here instead of stdout");

  std::vector<std::string> export_dirs;
  std::string export_out;
  CLI::App* exp = app.add_subcommand("export", "collect run summaries into one csv table");
  exp->add_option("dirs", export_dirs, "run directories (each holding summary.json)")
      ->required();
  exp->add_option("--out", export_out, "write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (train->parsed()) {
      svosim::RunConfig c = svosim::load_run_config(train_o.config_path);
      apply_overrides(c, train_o);
      svosim::cmd_train(c, train_o.dry_run, std::cout);
      return 0;
    }
    if (eval->parsed()) {
      svosim::RunConfig c = svosim::load_run_config(eval_o.config_path);
      apply_overrides(c, eval_o);
      return svosim::cmd_eval(c, eval_opts, std::cout);
    }
    if (sweep->parsed()) {
      svosim::SweepSpec spec = svosim::load_sweep_spec(sweep_o.config_path);
      if (!sweep_o.out_dir.empty()) spec.base.out_dir = sweep_o.out_dir;
      return svosim::cmd_sweep(spec, sweep_o.dry_run, std::cout);
    }
    if (replay->parsed()) {
      return svosim::cmd_replay(replay_log, replay_config, replay_out, std::cout);
    }
    if (exp->parsed()) {
      return svosim::cmd_export(export_dirs, export_out, std::cout);
    }
  } catch (const svosim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const svosim::IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
