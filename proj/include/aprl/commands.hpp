#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aprl {

// Subcommand implementations behind the CLI binary. Each returns 0 on
// success and throws (std::exception) on runtime failures; the binary maps
// those to exit code 1 and argument-parsing problems to exit code 2.

struct RunArgs {
  std::string data_path;
  std::string target;
  std::string task;  // "classification" or "regression"
  double time_budget_seconds = 0.0;
  std::optional<long long> iterations;  // set: deterministic iteration mode
  std::uint64_t seed = 0;
  std::string policy_path;  // empty: built-in heuristic policy
  std::string config_path;  // empty: defaults
  std::string out_path;
  std::vector<std::string> kinds;  // "column=numeric|categorical|datetime"
};

struct TrainPolicyArgs {
  std::string manifest_path;
  long long episodes = 0;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string config_path;  // empty: defaults
};

int cmd_run(const RunArgs& args, std::ostream& out);
int cmd_train_policy(const TrainPolicyArgs& args, std::ostream& out);
int cmd_evaluate(const std::string& report_path, std::ostream& out);
int cmd_ensemble_oracle(const std::string& predictions_path, std::ostream& out);

}  // namespace aprl
