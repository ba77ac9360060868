// rollin: exact solves, four-room curriculum training, beta sweeps and inequality
// verification.
//
//   rollin solve --mdp data/two_state_mdp.json --alpha 0.1
//   rollin train --reward hard --alpha 0.001 --beta 0.75 --seeds 0..9 --out runs/hard
//   rollin sweep --reward hard --seeds 0..9 --betas 0,0.1,0.2,0.3,0.5,0.75,0.9
//   rollin verify --suite all --seed 7
//   rollin curriculum-export --out runs
//
// Every option can also come from a TOML/INI file given with --config, with
// one section per subcommand ([train], [sweep], ...). The effective
// configuration is written next to the outputs.

#include "rollin/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace rollin;

struct TrainFlags {
  std::string reward = "hard";
  std::string method = "rollin";
  std::string mixture = "recursive";
  std::string seeds;
  std::uint64_t seed = 0;
};

void add_train_options(CLI::App* cmd, cli::TrainRunConfig& cfg, TrainFlags& flags) {
  auto& t = cfg.train;
  cmd->add_option("--reward", flags.reward, "Reward variant")->check(CLI::IsMember({"easy", "hard"}));
  cmd->add_option("--method", flags.method, "baseline or rollin")
      ->check(CLI::IsMember({"baseline", "rollin"}));
  cmd->add_option("--alpha", t.alpha, "Entropy coefficient");
  cmd->add_option("--beta", t.beta, "Roll-in ratio (ignored by the baseline)");
  cmd->add_option("--gamma", t.gamma, "Discount factor");
  cmd->add_option("--batch", t.batch, "Trajectories per gradient step");
  cmd->add_option("--horizon", t.horizon, "Trajectory length");
  cmd->add_option("--steps", t.steps, "Gradient steps");
  cmd->add_option("--lr", t.lr, "Adam learning rate");
  cmd->add_option("--log-interval", t.log_interval, "Gradient steps per metrics row");
  cmd->add_option("--mixture", flags.mixture, "Roll-in sampler")
      ->check(CLI::IsMember({"recursive", "shallow"}));
  cmd->add_option("--switch-threshold", t.switch_threshold, "Success rate that advances the context");
  cmd->add_flag("--stop-on-completion", t.stop_on_completion, "Stop once the final context is solved");
  cmd->add_flag("--exact-value", t.exact_value, "Log the exact V(rho) of the current context");
  cmd->add_flag("--wall-time", t.record_wall_time, "Fill the wall_time_s column");
  cmd->add_option("--threads", t.threads, "Worker threads");
  cmd->add_option("--seed", flags.seed, "Master seed");
  cmd->add_option("--seeds", flags.seeds, "Seed range N..M (overrides --seed)");
  cmd->add_option("--layout", cfg.layout_path, "Layout JSON (default: bundled four-room)");
  cmd->add_option("--out", cfg.out, "Output directory");
}

void finish_train(cli::TrainRunConfig& cfg, const TrainFlags& flags) {
  cfg.train.variant = fourroom::parse_variant(flags.reward);
  cfg.train.method = fourroom::parse_method(flags.method);
  cfg.train.mixture = fourroom::parse_mixture(flags.mixture);
  cfg.seeds = flags.seeds.empty() ? std::vector<std::uint64_t>{flags.seed}
                                  : cli::parse_seed_range(flags.seeds);
}

void echo_config(const CLI::App& app, const std::string& out) {
  cli::write_text(std::filesystem::path(out) / "effective_config.toml", app.config_to_str(true, false));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular curriculum RL toolkit: ROLLIN, entropy-regularized policy gradient, inequality checks"};
  app.set_config("--config", "", "TOML/INI configuration file");
  app.require_subcommand(1);

  cli::SolveConfig solve;
  auto* solve_cmd = app.add_subcommand("solve", "Soft value iteration on a JSON MDP");
  solve_cmd->add_option("--mdp", solve.mdp_path, "MDP JSON file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--alpha", solve.alpha, "Entropy coefficient (> 0)");
  solve_cmd->add_option("--tol", solve.tol, "Certified sup-norm tolerance on Q*");
  solve_cmd->add_option("--max-iter", solve.max_iter, "Iteration cap");
  solve_cmd->add_option("--out", solve.out, "Output directory");

  cli::TrainRunConfig train;
  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Four-room curriculum training, one CSV per seed");
  add_train_options(train_cmd, train, train_flags);

  cli::SweepConfig sweep;
  TrainFlags sweep_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "Beta grid x seeds with a summary table");
  add_train_options(sweep_cmd, sweep.run, sweep_flags);
  sweep_cmd->add_option("--betas", sweep.betas, "Beta grid")->delimiter(',');

  cli::VerifyConfig verify;
  double fault = 0.0;
  auto* verify_cmd = app.add_subcommand("verify", "Exact inequality checks; exit code 1 if any fails");
  verify_cmd->add_option("--suite", verify.suite, "Suite name")
      ->check(CLI::IsMember({"all", "identity", "contraction", "context_bound", "adjacent_value",
                             "mismatch", "gradient"}));
  verify_cmd->add_option("--seed", verify.options.seed, "Master seed");
  verify_cmd->add_option("--threads", verify.options.threads, "Worker threads");
  verify_cmd->add_option("--samples", verify.options.gradient_samples,
                         "Monte Carlo samples for the unbiasedness check");
  verify_cmd->add_option("--fourroom-alpha", verify.options.fourroom_alpha,
                         "Entropy coefficient of the four-room instances");
  verify_cmd->add_option("--inject-fault", fault, "Offset added to every left-hand side (testing)");
  verify_cmd->add_option("--out", verify.out, "Output directory");

  std::string export_layout;
  std::string export_out;
  double export_beta = 0.75;
  double export_threshold = 0.5;
  auto* export_cmd = app.add_subcommand("curriculum-export", "Write the curriculum as JSON");
  export_cmd->add_option("--layout", export_layout, "Layout JSON (default: bundled four-room)");
  export_cmd->add_option("--beta", export_beta, "Roll-in ratio");
  export_cmd->add_option("--switch-threshold", export_threshold, "Success-rate threshold");
  export_cmd->add_option("--out", export_out, "Output directory (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) {
      echo_config(app, solve.out);
      return cli::cmd_solve(solve, std::cout);
    }
    if (*train_cmd) {
      finish_train(train, train_flags);
      echo_config(app, train.out);
      return cli::cmd_train(train, std::cout);
    }
    if (*sweep_cmd) {
      finish_train(sweep.run, sweep_flags);
      echo_config(app, sweep.run.out);
      return cli::cmd_sweep(sweep, std::cout);
    }
    if (*verify_cmd) {
      verify.options.fault.lhs_offset = fault;
      echo_config(app, verify.out);
      return cli::cmd_verify(verify, std::cout);
    }
    if (*export_cmd) {
      return cli::cmd_curriculum_export(export_layout, export_beta, export_threshold, export_out,
                                        std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
