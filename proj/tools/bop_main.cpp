#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bop/harness/checkpoint.hpp"
#include "bop/harness/config.hpp"
#include "bop/harness/run.hpp"
#include "bop/verify/oracles.hpp"

namespace {

bop::harness::RunConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides) {
  auto cfg = path.empty() ? bop::harness::RunConfig{} : bop::harness::RunConfig::from_file(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    cfg.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (const char* env_seed = std::getenv("BOP_SEED")) {
    cfg.apply_override("seed", env_seed);
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bag-of-Policies trainer and benchmark harness"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train on a desk-scale environment");
  std::string train_config;
  std::string train_out = "runs/run";
  std::vector<std::string> train_sets;
  std::string train_env;
  int train_k = -1;
  std::int64_t train_seed = -1;
  train->add_option("--config", train_config, "Config file (key = value lines)");
  train->add_option("--out", train_out, "Run directory");
  train->add_option("--set", train_sets, "Override, e.g. --set beta=0.1");
  train->add_option("--env", train_env, "Environment name, e.g. deep_sea:10");
  train->add_option("--k", train_k, "Number of heads");
  train->add_option("--seed", train_seed, "Seed");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string eval_ckpt;
  int eval_episodes = 20;
  std::string eval_mode = "average-then-argmax";
  std::uint64_t eval_seed = 7;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--episodes", eval_episodes, "Number of evaluation episodes");
  eval->add_option("--mode", eval_mode,
                   "average-then-argmax | argmax-then-vote | sample-then-argmax | sample");
  eval->add_option("--eval-seed", eval_seed, "Evaluation RNG seed");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Comparative sweep over one config axis");
  std::string sweep_config;
  std::string sweep_axis;
  std::vector<std::string> sweep_values;
  std::vector<std::uint64_t> sweep_seeds{1, 2, 3};
  std::string sweep_out = "runs/sweep";
  std::vector<std::string> sweep_sets;
  sweep->add_option("--config", sweep_config, "Base config file");
  sweep->add_option("--axis", sweep_axis,
                    "k | schedule_mode | action_selection_mode | shared_bellman_targets | beta")
      ->required();
  sweep->add_option("--values", sweep_values, "Axis values")->required();
  sweep->add_option("--seeds", sweep_seeds, "Seeds");
  sweep->add_option("--out", sweep_out, "Output directory");
  sweep->add_option("--set", sweep_sets, "Base-config override");

  // plot-data
  auto* plot = app.add_subcommand("plot-data", "Emit tidy CSV from a run's metrics");
  std::string plot_run;
  plot->add_option("--run", plot_run, "Run directory")->required();

  // verify
  auto* verify = app.add_subcommand("verify", "Run the oracle battery");
  std::uint64_t verify_seed = 12345;
  verify->add_option("--seed", verify_seed, "Battery seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = load_config(train_config, train_sets);
      if (!train_env.empty()) cfg.env = train_env;
      if (train_k > 0) cfg.k = train_k;
      if (train_seed >= 0) cfg.seed = static_cast<std::uint64_t>(train_seed);
      const auto result = bop::harness::train_run(cfg, train_out);
      std::cout << "run directory: " << result.run_dir << "\n"
                << "iterations: " << result.iterations << "\n"
                << "env steps: " << result.env_steps << "\n"
                << "final checkpoint: " << result.final_checkpoint << "\n";
    } else if (*eval) {
      const auto res = bop::harness::eval_checkpoint(eval_ckpt, eval_episodes, eval_mode, eval_seed);
      std::cout << "episodes: " << res.returns.size() << "\n"
                << "mean return: " << res.mean << "\n"
                << "median return: " << res.median << "\n"
                << "stderr: " << res.stderr_mean << "\n";
    } else if (*sweep) {
      auto cfg = load_config(sweep_config, sweep_sets);
      const auto res = bop::harness::sweep_run(cfg, sweep_axis, sweep_values, sweep_seeds, sweep_out);
      std::cout << "runs: " << res.run_dirs.size() << "\n"
                << "aggregated: " << res.csv_path << "\n";
    } else if (*plot) {
      bop::harness::plot_data(plot_run, std::cout);
    } else if (*verify) {
      const auto lines = bop::verify::run_battery(verify_seed);
      bool all = true;
      for (const auto& l : lines) {
        std::cout << "[verify] " << l.name << ": " << (l.pass ? "PASS" : "FAIL") << " ("
                  << l.detail << ")\n";
        all = all && l.pass;
      }
      return all ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
