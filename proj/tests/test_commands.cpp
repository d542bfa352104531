#include <fstream>
#include <sstream>
#include <string>

#include "aprl/commands.hpp"
#include "aprl/policy.hpp"
#include "aprl/report.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace aprl;
using namespace test_helpers;

namespace {

std::string temp_path(const std::string& stem, const std::string& ext) {
  static int counter = 0;
  return "/tmp/aprl_cmd_" + stem + "_" + std::to_string(counter++) + "." + ext;
}

std::string write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

// A saved copy of the shared mixed-classification problem; target column is
// named "target" by the dataset defaults.
std::string mixed_csv(std::size_t rows = 60) {
  std::string path = temp_path("data", "csv");
  save_csv(mixed_classification(rows, 11), path);
  return path;
}

RunArgs base_run_args(const std::string& csv, long long iterations,
                      const std::string& out) {
  RunArgs args;
  args.data_path = csv;
  args.target = "target";
  args.task = "classification";
  args.time_budget_seconds = 60.0;
  args.iterations = iterations;
  args.seed = 7;
  args.out_path = out;
  return args;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("run command writes a validating report and prints a summary") {
  std::string csv = mixed_csv();
  std::string out_path = temp_path("report", "json");
  std::ostringstream out;

  CHECK(cmd_run(base_run_args(csv, 5, out_path), out) == 0);
  CHECK(out.str().find("report " + out_path) != std::string::npos);
  CHECK(out.str().find("baseline auc ") != std::string::npos);
  CHECK(out.str().find("ensemble auc ") != std::string::npos);
  CHECK(out.str().find("error_reduction ") != std::string::npos);

  Json report = read_report(out_path);
  CHECK_NOTHROW(validate_report(report));
  CHECK(report["dataset"]["task"] == "classification");
  CHECK(report["budget"]["mode"] == "iterations");
  CHECK(report["budget"]["consumed"] == 5);
  CHECK(report["steps"].size() == 5);
  CHECK(report["policy"] == "heuristic");
  CHECK(report["dataset"]["train_rows"].get<int>() +
            report["dataset"]["holdout_rows"].get<int>() ==
        report["dataset"]["rows"].get<int>());
}

TEST_CASE("identical run invocations give byte-identical reports modulo timestamp") {
  std::string csv = mixed_csv();
  std::string out_a = temp_path("repeat_a", "json");
  std::string out_b = temp_path("repeat_b", "json");
  std::ostringstream sink;
  REQUIRE(cmd_run(base_run_args(csv, 4, out_a), sink) == 0);
  REQUIRE(cmd_run(base_run_args(csv, 4, out_b), sink) == 0);
  CHECK(mask_timestamp(slurp(out_a)) == mask_timestamp(slurp(out_b)));
}

TEST_CASE("zero iterations keeps the naked baseline") {
  std::string csv = mixed_csv();
  std::string out_path = temp_path("iter0", "json");
  std::ostringstream out;
  REQUIRE(cmd_run(base_run_args(csv, 0, out_path), out) == 0);

  Json report = read_report(out_path);
  CHECK(report["ensemble"].size() == 1);
  CHECK(report["steps"].empty());
  CHECK(report["metrics"]["baseline_holdout"] == report["metrics"]["ensemble_holdout"]);
  CHECK(report["metrics"]["error_reduction"].get<double>() == 0.0);
}

TEST_CASE("config files override exploration settings") {
  std::string csv = mixed_csv();
  std::string config = write_file(temp_path("config", "json"),
                                  R"({"depth_cap": 2, "k_folds": 4, "phi": 0.01,
                                      "hpo_evals": 2, "pca_k": 3,
                                      "holdout_fraction": 0.25})");
  std::string out_path = temp_path("configured", "json");
  RunArgs args = base_run_args(csv, 3, out_path);
  args.config_path = config;
  args.kinds = {"a=numeric", "color=categorical"};
  std::ostringstream out;
  REQUIRE(cmd_run(args, out) == 0);

  Json report = read_report(out_path);
  CHECK(report["config"]["depth_cap"] == 2);
  CHECK(report["config"]["k_folds"] == 4);
  CHECK(report["config"]["phi"].get<double>() == 0.01);
  CHECK(report["config"]["pca_k"] == 3);
  CHECK(report["dataset"]["holdout_fraction"].get<double>() == 0.25);

  SUBCASE("unknown config keys are rejected") {
    std::string bad = write_file(temp_path("badcfg", "json"), R"({"depht_cap": 2})");
    RunArgs bad_args = base_run_args(csv, 2, temp_path("never", "json"));
    bad_args.config_path = bad;
    std::ostringstream sink;
    CHECK_THROWS_WITH_AS(cmd_run(bad_args, sink), doctest::Contains("depht_cap"),
                         std::runtime_error);
  }

  SUBCASE("malformed kind declarations are rejected") {
    RunArgs bad_args = base_run_args(csv, 2, temp_path("never", "json"));
    bad_args.kinds = {"color"};
    std::ostringstream sink;
    CHECK_THROWS_WITH_AS(cmd_run(bad_args, sink), doctest::Contains("column=kind"),
                         std::runtime_error);
    bad_args.kinds = {"color=ordinal"};
    CHECK_THROWS_WITH_AS(cmd_run(bad_args, sink), doctest::Contains("ordinal"),
                         std::runtime_error);
  }
}

TEST_CASE("unknown task or missing data fail as runtime errors") {
  std::ostringstream sink;
  RunArgs args = base_run_args(mixed_csv(), 2, temp_path("never", "json"));
  args.task = "ranking";
  CHECK_THROWS_WITH_AS(cmd_run(args, sink), doctest::Contains("ranking"),
                       std::runtime_error);

  args = base_run_args("/nonexistent/data.csv", 2, temp_path("never", "json"));
  CHECK_THROWS(cmd_run(args, sink));
}

TEST_CASE("train-policy builds a loadable policy from a manifest") {
  std::string csv = mixed_csv();
  std::string manifest = temp_path("manifest", "tsv");
  // comments and blank lines are skipped; paths may be absolute or relative
  write_file(manifest, "# corpus for the smoke test\n\n" + csv +
                           "\ttarget\tclassification\t0.5\n");

  TrainPolicyArgs args;
  args.manifest_path = manifest;
  args.episodes = 2;
  args.seed = 3;
  args.out_path = temp_path("policy", "txt");
  std::ostringstream out;
  CHECK(cmd_train_policy(args, out) == 0);
  CHECK(out.str().find("episodes 2") != std::string::npos);
  CHECK(out.str().find("datasets 1") != std::string::npos);

  PolicyWeights policy = load_policy(args.out_path);
  CHECK(policy.training_episodes == 2);

  SUBCASE("the trained policy file feeds straight back into run") {
    std::string out_path = temp_path("polrun", "json");
    RunArgs run_args = base_run_args(csv, 3, out_path);
    run_args.policy_path = args.out_path;
    std::ostringstream sink;
    CHECK(cmd_run(run_args, sink) == 0);
    CHECK(read_report(out_path)["policy"] == args.out_path);
  }

  SUBCASE("malformed manifest lines are reported with their number") {
    std::string broken = temp_path("broken", "tsv");
    write_file(broken, csv + "\ttarget\tclassification\n");
    args.manifest_path = broken;
    std::ostringstream sink;
    CHECK_THROWS_WITH_AS(cmd_train_policy(args, sink), doctest::Contains("line 1"),
                         std::runtime_error);

    write_file(broken, csv + "\ttarget\tclassification\tsoon\n");
    CHECK_THROWS_WITH_AS(cmd_train_policy(args, sink), doctest::Contains("soon"),
                         std::runtime_error);

    write_file(broken, "# nothing\n");
    CHECK_THROWS_WITH_AS(cmd_train_policy(args, sink),
                         doctest::Contains("no datasets"), std::runtime_error);
  }
}

TEST_CASE("evaluate prints the stored metrics table") {
  std::string csv = mixed_csv();
  std::string out_path = temp_path("eval", "json");
  std::ostringstream sink;
  REQUIRE(cmd_run(base_run_args(csv, 3, out_path), sink) == 0);

  std::ostringstream out;
  CHECK(cmd_evaluate(out_path, out) == 0);
  std::string text = out.str();
  CHECK(text.find("task             classification") != std::string::npos);
  CHECK(text.find("metric           auc") != std::string::npos);
  CHECK(text.find("budget           iterations: consumed 3 of 3") != std::string::npos);
  CHECK(text.find("error_reduction") != std::string::npos);
  CHECK(text.find("member 0") != std::string::npos);

  SUBCASE("tampered reports are rejected before printing") {
    Json report = read_report(out_path);
    report["metrics"]["error_reduction"] = 0.123456;
    write_report(report, out_path);
    std::ostringstream sink2;
    CHECK_THROWS_AS(cmd_evaluate(out_path, sink2), std::runtime_error);
  }
}

TEST_CASE("ensemble-oracle compares greedy with the exact optimum") {
  // three-candidate worked example: singleton errors 0.25 / 0.25 / 0.16,
  // final three-member ensemble error 53/450
  std::string preds = write_file(temp_path("preds", "csv"),
                                 "y,m1,m2,m3\n"
                                 "1,1,1,0.6\n"
                                 "0,0,0,0.4\n"
                                 "1,1,0,0.6\n"
                                 "0,1,0,0.4\n");
  std::ostringstream out;
  CHECK(cmd_ensemble_oracle(preds, out) == 0);
  std::string text = out.str();
  CHECK(text.find("candidates  3") != std::string::npos);
  CHECK(text.find("greedy      E 0.117777777778") != std::string::npos);
  CHECK(text.find("oracle      E 0.117777777778") != std::string::npos);
  CHECK(text.find("members [m1, m2, m3]") != std::string::npos);  // oracle, ascending

  SUBCASE("matrices without model columns are rejected") {
    std::string empty = write_file(temp_path("empty", "csv"), "y\n1\n0\n");
    std::ostringstream sink;
    CHECK_THROWS_WITH_AS(cmd_ensemble_oracle(empty, sink),
                         doctest::Contains("model columns"), std::runtime_error);
  }
}
