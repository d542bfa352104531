#include "aprl/report.hpp"

#include <cmath>
#include <ctime>
#include <fstream>
#include <regex>
#include <stdexcept>

#include "aprl/metrics.hpp"

namespace aprl {

namespace {

std::string utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json hp_to_json(const HyperParams& hp) {
  Json out = Json::object();
  for (const auto& [name, value] : hp) {
    if (value.kind == HpValue::Kind::category) {
      out[name] = value.category;
    } else if (std::floor(value.number) == value.number &&
               std::abs(value.number) < 9.0e15) {
      out[name] = static_cast<long long>(value.number);
    } else {
      out[name] = value.number;
    }
  }
  return out;
}

Json member_to_json(const EnsembleMember& m) {
  Json j = Json::object();
  j["estimator"] = std::string(estimator_name(m.estimator));
  j["hyperparams"] = hp_to_json(m.hyperparams);
  Json lineage = Json::array();
  for (const TransformSpec& spec : m.lineage) lineage.push_back(spec.canonical_text());
  j["lineage"] = std::move(lineage);
  j["cv_error"] = m.cv_error;
  j["from_hpo"] = m.from_hpo;
  return j;
}

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("report: " + what);
}

const Json& need(const Json& parent, const char* key, const char* where) {
  auto it = parent.find(key);
  if (it == parent.end()) fail(std::string(where) + " is missing '" + key + "'");
  return *it;
}

double need_finite(const Json& parent, const char* key, const char* where) {
  const Json& v = need(parent, key, where);
  if (!v.is_number()) fail(std::string(where) + "." + key + " is not a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(std::string(where) + "." + key + " is not finite");
  return d;
}

std::string need_string(const Json& parent, const char* key, const char* where) {
  const Json& v = need(parent, key, where);
  if (!v.is_string()) fail(std::string(where) + "." + key + " is not a string");
  return v.get<std::string>();
}

}  // namespace

Json build_report(const RunResult& result, const ReportContext& ctx) {
  Json report = Json::object();
  report["schema"] = std::string(kReportSchema);
  report["generated_at"] = utc_now();

  Json dataset = Json::object();
  dataset["name"] = ctx.dataset_name;
  dataset["task"] = std::string(task_name(result.task));
  dataset["rows"] = ctx.total_rows;
  dataset["feature_columns"] = ctx.feature_columns;
  dataset["train_rows"] = ctx.train_rows;
  dataset["holdout_rows"] = ctx.holdout_rows;
  dataset["holdout_fraction"] = ctx.holdout_fraction;
  dataset["holdout_seed"] = ctx.holdout_seed;
  report["dataset"] = std::move(dataset);

  Json budget = Json::object();
  if (result.clock.iteration_mode()) {
    budget["mode"] = "iterations";
    budget["iteration_cap"] = *result.clock.iteration_cap;
    budget["consumed"] = result.clock.iterations;
  } else {
    budget["mode"] = "wall";
    budget["t_max_seconds"] = result.clock.t_max_seconds;
    budget["consumed"] = result.clock.elapsed_seconds;
  }
  report["budget"] = std::move(budget);

  report["seed"] = ctx.seed;
  report["policy"] = ctx.policy_source;

  Json metrics = Json::object();
  metrics["headline"] = result.task == TaskKind::binary_classification ? "auc" : "rmse";
  metrics["baseline_holdout"] = ctx.baseline_holdout;
  metrics["ensemble_holdout"] = ctx.ensemble_holdout;
  std::optional<double> reduction =
      error_reduction(ctx.baseline_holdout, ctx.ensemble_holdout, result.task);
  if (reduction)
    metrics["error_reduction"] = *reduction;
  else
    metrics["error_reduction"] = nullptr;
  report["metrics"] = std::move(metrics);

  Json members = Json::array();
  for (const EnsembleMember& m : result.members) members.push_back(member_to_json(m));
  report["ensemble"] = std::move(members);
  report["baseline"] = member_to_json(result.baseline);

  Json diagnostics = Json::object();
  diagnostics["baseline_cv_error"] = result.tree.baseline_error;
  Json ege = Json::object();
  ege["e"] = result.tree.best_selection.value.e;
  ege["e_bar"] = result.tree.best_selection.value.e_bar;
  ege["a_bar"] = result.tree.best_selection.value.a_bar;
  diagnostics["ensemble_cv"] = std::move(ege);
  diagnostics["data_nodes"] = result.tree.data_nodes.size();
  diagnostics["model_nodes"] = result.tree.model_nodes.size();
  diagnostics["actions"] = result.tree.action_log.size();
  report["diagnostics"] = std::move(diagnostics);

  Json steps = Json::array();
  for (const StepLog& s : result.steps) {
    Json step = Json::object();
    step["index"] = s.index;
    step["action"] = s.action;
    if (result.clock.iteration_mode())
      step["consumed"] = static_cast<long long>(s.elapsed);
    else
      step["consumed"] = s.elapsed;
    step["e_min"] = s.e_min;
    step["reward"] = s.reward;
    steps.push_back(std::move(step));
  }
  report["steps"] = std::move(steps);

  Json config = Json::object();
  config["depth_cap"] = ctx.config.depth_cap;
  config["k_folds"] = ctx.config.k_folds;
  config["hpo_fraction"] = ctx.config.hpo_fraction;
  config["hpo_floor_seconds"] = ctx.config.hpo_floor_seconds;
  config["hpo_evals"] = ctx.config.hpo_evals;
  config["phi"] = ctx.config.phi;
  config["allow_drop"] = ctx.config.allow_drop;
  config["pca_k"] = ctx.config.transform.pca_k;
  config["freq_distinct_cap"] = ctx.config.transform.freq_distinct_cap;
  config["groupby_pair_cap"] = ctx.config.transform.groupby_pair_cap;
  config["selection_keep_fraction"] = ctx.config.transform.selection_keep_fraction;
  config["exec"] = ctx.config.exec == Exec::parallel ? "parallel" : "serial";
  report["config"] = std::move(config);

  return report;
}

void validate_report(const Json& report) {
  if (!report.is_object()) fail("top level is not an object");
  if (need_string(report, "schema", "report") != kReportSchema)
    fail("unknown schema identifier");
  need_string(report, "generated_at", "report");

  const Json& dataset = need(report, "dataset", "report");
  need_string(dataset, "name", "dataset");
  std::string task_text = need_string(dataset, "task", "dataset");
  std::optional<TaskKind> task = task_from_name(task_text);
  if (!task) fail("dataset.task '" + task_text + "' is not a known task");
  for (const char* key : {"rows", "train_rows", "holdout_rows"})
    if (need_finite(dataset, key, "dataset") < 0) fail("negative row count");

  const Json& budget = need(report, "budget", "report");
  std::string mode = need_string(budget, "mode", "budget");
  if (mode == "wall") {
    if (need_finite(budget, "t_max_seconds", "budget") < 0)
      fail("budget.t_max_seconds is negative");
  } else if (mode == "iterations") {
    if (need_finite(budget, "iteration_cap", "budget") < 0)
      fail("budget.iteration_cap is negative");
  } else {
    fail("budget.mode '" + mode + "' is not wall or iterations");
  }
  if (need_finite(budget, "consumed", "budget") < 0) fail("budget.consumed is negative");

  need_finite(report, "seed", "report");
  need_string(report, "policy", "report");

  const Json& metrics = need(report, "metrics", "report");
  std::string headline = need_string(metrics, "headline", "metrics");
  const char* expected_headline =
      *task == TaskKind::binary_classification ? "auc" : "rmse";
  if (headline != expected_headline)
    fail("metrics.headline '" + headline + "' does not match the task");
  double base = need_finite(metrics, "baseline_holdout", "metrics");
  double opt = need_finite(metrics, "ensemble_holdout", "metrics");
  const Json& stored = need(metrics, "error_reduction", "metrics");
  std::optional<double> recomputed = error_reduction(base, opt, *task);
  if (stored.is_null()) {
    if (recomputed) fail("metrics.error_reduction is null but the metrics define it");
  } else if (!stored.is_number()) {
    fail("metrics.error_reduction is neither a number nor null");
  } else if (!recomputed) {
    fail("metrics.error_reduction is stored but its denominator is zero");
  } else if (std::abs(stored.get<double>() - *recomputed) > 1e-9) {
    fail("metrics.error_reduction disagrees with the stored holdout metrics");
  }

  const Json& ensemble = need(report, "ensemble", "report");
  if (!ensemble.is_array() || ensemble.empty())
    fail("ensemble must be a non-empty array");
  auto check_member = [](const Json& m, const char* where) {
    std::string est = need_string(m, "estimator", where);
    if (!estimator_from_name(est))
      fail(std::string(where) + ".estimator '" + est + "' is unknown");
    if (!need(m, "hyperparams", where).is_object())
      fail(std::string(where) + ".hyperparams is not an object");
    const Json& lineage = need(m, "lineage", where);
    if (!lineage.is_array()) fail(std::string(where) + ".lineage is not an array");
    for (const Json& entry : lineage)
      if (!entry.is_string()) fail(std::string(where) + ".lineage has a non-string entry");
    if (need_finite(m, "cv_error", where) < 0)
      fail(std::string(where) + ".cv_error is negative");
    if (!need(m, "from_hpo", where).is_boolean())
      fail(std::string(where) + ".from_hpo is not a boolean");
  };
  for (const Json& m : ensemble) check_member(m, "ensemble member");
  check_member(need(report, "baseline", "report"), "baseline");

  const Json& steps = need(report, "steps", "report");
  if (!steps.is_array()) fail("steps is not an array");
  int expected_index = 0;
  for (const Json& s : steps) {
    if (static_cast<int>(need_finite(s, "index", "step")) != expected_index++)
      fail("step indexes are not consecutive from zero");
    need_string(s, "action", "step");
    if (need_finite(s, "consumed", "step") < 0) fail("step.consumed is negative");
    need_finite(s, "e_min", "step");
    need_finite(s, "reward", "step");
  }

  if (!need(report, "config", "report").is_object()) fail("config is not an object");
  need(report, "diagnostics", "report");
}

void write_report(const Json& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '" + path + "' for writing");
  out << report.dump(2) << '\n';
  if (!out) fail("failed while writing '" + path + "'");
}

Json read_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  return Json::parse(in);
}

std::string mask_timestamp(const std::string& report_text) {
  static const std::regex kStamp("(\"generated_at\"\\s*:\\s*\")[^\"]*(\")");
  return std::regex_replace(report_text, kStamp, "$1<masked>$2");
}

}  // namespace aprl
