#include <iostream>

#include "CLI11.hpp"
#include "aprl/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"aprl: automated predictive-modeling engine"};
  app.require_subcommand(1);

  aprl::RunArgs run_args;
  long long iterations = 0;
  CLI::App* run =
      app.add_subcommand("run", "Explore one dataset and write an ensemble report");
  run->add_option("--data", run_args.data_path, "Training CSV file")->required();
  run->add_option("--target", run_args.target, "Target column name")->required();
  run->add_option("--task", run_args.task, "Problem type")
      ->required()
      ->check(CLI::IsMember({"classification", "regression"}));
  run->add_option("--time-budget", run_args.time_budget_seconds,
                  "Exploration budget in seconds")
      ->required();
  CLI::Option* iterations_opt = run->add_option(
      "--iterations", iterations,
      "Charge the budget in actions instead of seconds (deterministic)");
  run->add_option("--seed", run_args.seed, "Random seed")->required();
  run->add_option("--policy", run_args.policy_path,
                  "Policy file (default: built-in heuristic weights)");
  run->add_option("--config", run_args.config_path, "JSON configuration overrides");
  run->add_option("--out", run_args.out_path, "Report output path")->required();
  run->add_option("--kinds", run_args.kinds,
                  "Declared column kinds, e.g. age=numeric,city=categorical")
      ->delimiter(',');

  aprl::TrainPolicyArgs train_args;
  CLI::App* train =
      app.add_subcommand("train-policy", "Q-learn exploration weights over a corpus");
  train->add_option("--manifest", train_args.manifest_path,
                    "TSV manifest: csv_path, target, task, t_max per line")
      ->required();
  train->add_option("--episodes", train_args.episodes, "Training episodes")->required();
  train->add_option("--seed", train_args.seed, "Random seed")->required();
  train->add_option("--out", train_args.out_path, "Policy output path")->required();
  train->add_option("--config", train_args.config_path, "JSON configuration overrides");

  std::string report_path;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Print the metrics of a report");
  evaluate->add_option("--report", report_path, "Report file to summarize")->required();

  std::string predictions_path;
  CLI::App* oracle = app.add_subcommand(
      "ensemble-oracle", "Compare greedy selection against the exact optimum");
  oracle->add_option("--predictions", predictions_path,
                     "CSV with column y followed by one column per model")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) {
      if (iterations_opt->count() > 0) run_args.iterations = iterations;
      return aprl::cmd_run(run_args, std::cout);
    }
    if (*train) return aprl::cmd_train_policy(train_args, std::cout);
    if (*evaluate) return aprl::cmd_evaluate(report_path, std::cout);
    if (*oracle) return aprl::cmd_ensemble_oracle(predictions_path, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
