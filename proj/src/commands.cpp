#include "aprl/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "aprl/ensemble.hpp"
#include "aprl/exploration.hpp"
#include "aprl/metrics.hpp"
#include "aprl/report.hpp"

namespace aprl {

namespace {

// Everything a config file may override, for both run and train-policy.
struct CliConfig {
  ExplorationConfig exploration;
  double holdout_fraction = 0.33;
  std::uint64_t holdout_seed = 1;
  int threads = 0;  // 0 keeps the library default (serial)
  TrainOptions train;
};

CliConfig load_cli_config(const std::string& path) {
  CliConfig cfg;
  if (path.empty()) return cfg;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  Json j = Json::parse(in);
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");

  for (const auto& [key, value] : j.items()) {
    if (key == "depth_cap") cfg.exploration.depth_cap = value.get<int>();
    else if (key == "k_folds") cfg.exploration.k_folds = value.get<int>();
    else if (key == "hpo_fraction") cfg.exploration.hpo_fraction = value.get<double>();
    else if (key == "hpo_floor_seconds")
      cfg.exploration.hpo_floor_seconds = value.get<double>();
    else if (key == "hpo_evals") cfg.exploration.hpo_evals = value.get<int>();
    else if (key == "phi") cfg.exploration.phi = value.get<double>();
    else if (key == "allow_drop") cfg.exploration.allow_drop = value.get<bool>();
    else if (key == "pca_k") cfg.exploration.transform.pca_k = value.get<int>();
    else if (key == "freq_distinct_cap")
      cfg.exploration.transform.freq_distinct_cap = value.get<int>();
    else if (key == "groupby_pair_cap")
      cfg.exploration.transform.groupby_pair_cap = value.get<int>();
    else if (key == "selection_keep_fraction")
      cfg.exploration.transform.selection_keep_fraction = value.get<double>();
    else if (key == "holdout_fraction") cfg.holdout_fraction = value.get<double>();
    else if (key == "holdout_seed") cfg.holdout_seed = value.get<std::uint64_t>();
    else if (key == "threads") cfg.threads = value.get<int>();
    else if (key == "alpha") cfg.train.alpha = value.get<double>();
    else if (key == "gamma") cfg.train.gamma = value.get<double>();
    else if (key == "epsilon") cfg.train.epsilon = value.get<double>();
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }

  if (cfg.threads > 1) {
    set_threads(cfg.threads);
    cfg.exploration.exec = Exec::parallel;
  }
  return cfg;
}

std::map<std::string, ColumnKind> parse_kinds(const std::vector<std::string>& entries) {
  std::map<std::string, ColumnKind> kinds;
  for (const std::string& entry : entries) {
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= entry.size())
      throw std::runtime_error("kinds: expected column=kind, got '" + entry + "'");
    std::string column = entry.substr(0, eq);
    std::string kind_text = entry.substr(eq + 1);
    std::optional<ColumnKind> kind = column_kind_from_name(kind_text);
    if (!kind) throw std::runtime_error("kinds: unknown kind '" + kind_text + "'");
    if (!kinds.emplace(std::move(column), *kind).second)
      throw std::runtime_error("kinds: column '" + entry.substr(0, eq) +
                               "' declared twice");
  }
  return kinds;
}

std::string format_fixed(double v, int digits = 6) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::string format_short(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

}  // namespace

int cmd_run(const RunArgs& args, std::ostream& out) {
  CliConfig cfg = load_cli_config(args.config_path);

  std::optional<TaskKind> task = task_from_name(args.task);
  if (!task) throw std::runtime_error("unknown task '" + args.task + "'");

  Dataset full = load_csv(args.data_path, args.target, parse_kinds(args.kinds), task);
  auto [train, holdout] = holdout_split(full, cfg.holdout_fraction, cfg.holdout_seed);

  Clock clock;
  clock.t_max_seconds = args.time_budget_seconds;
  if (args.iterations) clock.iteration_cap = *args.iterations;

  PolicyWeights policy =
      args.policy_path.empty() ? heuristic_policy() : load_policy(args.policy_path);

  std::size_t train_rows = train.n_rows;
  auto train_ptr = std::make_shared<const Dataset>(std::move(train));
  RunResult result = run(train_ptr, clock, policy, cfg.exploration, args.seed);

  std::vector<double> baseline_pred = result.predict_baseline(holdout);
  std::vector<double> ensemble_pred = result.predict(holdout);
  double baseline_metric = holdout_metric(baseline_pred, holdout.target.values, *task);
  double ensemble_metric = holdout_metric(ensemble_pred, holdout.target.values, *task);

  ReportContext ctx;
  ctx.dataset_name = full.name;
  ctx.seed = args.seed;
  ctx.total_rows = full.n_rows;
  ctx.feature_columns = full.columns.size();
  ctx.train_rows = train_rows;
  ctx.holdout_rows = holdout.n_rows;
  ctx.holdout_fraction = cfg.holdout_fraction;
  ctx.holdout_seed = cfg.holdout_seed;
  ctx.baseline_holdout = baseline_metric;
  ctx.ensemble_holdout = ensemble_metric;
  ctx.policy_source = args.policy_path.empty() ? "heuristic" : args.policy_path;
  ctx.config = cfg.exploration;

  Json report = build_report(result, ctx);
  validate_report(report);
  write_report(report, args.out_path);

  const char* headline = *task == TaskKind::binary_classification ? "auc" : "rmse";
  out << "report " << args.out_path << "\n";
  out << "baseline " << headline << " " << format_fixed(baseline_metric) << "\n";
  out << "ensemble " << headline << " " << format_fixed(ensemble_metric) << "\n";
  const Json& reduction = report["metrics"]["error_reduction"];
  out << "error_reduction "
      << (reduction.is_null() ? std::string("undefined")
                              : format_fixed(reduction.get<double>()))
      << "\n";
  return 0;
}

int cmd_train_policy(const TrainPolicyArgs& args, std::ostream& out) {
  CliConfig cfg = load_cli_config(args.config_path);
  if (args.episodes < 0) throw std::runtime_error("episodes must be non-negative");

  std::ifstream in(args.manifest_path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot open '" + args.manifest_path + "'");
  std::filesystem::path base = std::filesystem::path(args.manifest_path).parent_path();

  std::vector<CorpusEntry> corpus;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4)
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": expected csv_path<TAB>target<TAB>task<TAB>t_max");

    std::optional<TaskKind> task = task_from_name(fields[2]);
    if (!task)
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": unknown task '" + fields[2] + "'");
    double t_max = 0.0;
    try {
      std::size_t used = 0;
      t_max = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument(fields[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": t_max '" + fields[3] + "' is not a number");
    }
    if (t_max <= 0.0)
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": t_max must be positive");

    std::filesystem::path csv = fields[0];
    if (csv.is_relative()) csv = base / csv;

    Dataset d = load_csv(csv.string(), fields[1], {}, task);
    Clock clock;
    clock.t_max_seconds = t_max;
    corpus.push_back({std::make_shared<const Dataset>(std::move(d)), clock});
  }
  if (corpus.empty()) throw std::runtime_error("manifest lists no datasets");

  TrainOptions options = cfg.train;
  options.episodes = args.episodes;
  PolicyWeights policy = train_policy(corpus, cfg.exploration, options, args.seed);
  save_policy(policy, args.out_path);

  out << "policy " << args.out_path << "\n";
  out << "episodes " << args.episodes << "\n";
  out << "datasets " << corpus.size() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& report_path, std::ostream& out) {
  Json report = read_report(report_path);
  validate_report(report);

  auto field = [&report](std::initializer_list<const char*> path) -> const Json& {
    const Json* node = &report;
    for (const char* key : path) node = &node->at(key);
    return *node;
  };

  out << "dataset          " << field({"dataset", "name"}).get<std::string>() << "\n";
  out << "task             " << field({"dataset", "task"}).get<std::string>() << "\n";
  out << "policy           " << field({"policy"}).get<std::string>() << "\n";

  const Json& budget = report["budget"];
  if (budget["mode"] == "iterations") {
    out << "budget           iterations: consumed "
        << budget["consumed"].get<long long>() << " of "
        << budget["iteration_cap"].get<long long>() << "\n";
  } else {
    out << "budget           wall: consumed "
        << format_fixed(budget["consumed"].get<double>(), 3) << "s of "
        << format_fixed(budget["t_max_seconds"].get<double>(), 3) << "s\n";
  }

  out << "metric           " << field({"metrics", "headline"}).get<std::string>() << "\n";
  out << "baseline         "
      << format_fixed(field({"metrics", "baseline_holdout"}).get<double>()) << "\n";
  out << "ensemble         "
      << format_fixed(field({"metrics", "ensemble_holdout"}).get<double>()) << "\n";
  const Json& reduction = field({"metrics", "error_reduction"});
  out << "error_reduction  "
      << (reduction.is_null() ? std::string("undefined")
                              : format_fixed(reduction.get<double>()))
      << "\n";

  const Json& members = report["ensemble"];
  out << "members          " << members.size() << "\n";
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Json& m = members[i];
    out << "  member " << i << "        " << m["estimator"].get<std::string>()
        << " (cv_error " << format_fixed(m["cv_error"].get<double>()) << ", lineage "
        << m["lineage"].size() << (m["from_hpo"].get<bool>() ? ", tuned" : "") << ")\n";
  }
  out << "steps            " << report["steps"].size() << "\n";
  out << "generated_at     " << report["generated_at"].get<std::string>() << "\n";
  return 0;
}

int cmd_ensemble_oracle(const std::string& predictions_path, std::ostream& out) {
  Dataset d = load_csv(predictions_path, "y");
  if (d.columns.empty())
    throw std::runtime_error("prediction matrix has no model columns");

  std::vector<PredictionVector> candidates;
  candidates.reserve(d.columns.size());
  for (std::size_t c = 0; c < d.columns.size(); ++c) {
    const FeatureColumn& col = d.columns[c];
    if (col.kind != ColumnKind::numeric)
      throw std::runtime_error("prediction column '" + col.name + "' is not numeric");
    PredictionVector pv;
    pv.node_id = static_cast<int>(c);
    pv.values = col.numeric;
    double se = 0.0;
    for (std::size_t i = 0; i < col.numeric.size(); ++i) {
      double diff = col.numeric[i] - d.target.values[i];
      se += diff * diff;
    }
    pv.cv_error = se / static_cast<double>(d.n_rows);
    candidates.push_back(std::move(pv));
  }

  SelectionResult greedy = greedy_select(candidates, d.target.values);
  SelectionResult oracle = brute_force_select(candidates, d.target.values);

  auto names = [&d](const std::vector<int>& ids) {
    std::string text = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i > 0) text += ", ";
      text += d.columns[static_cast<std::size_t>(ids[i])].name;
    }
    return text + "]";
  };

  out << "rows        " << d.n_rows << "\n";
  out << "candidates  " << candidates.size() << "\n";
  out << "greedy      E " << format_short(greedy.value.e) << " members "
      << names(greedy.members) << "\n";
  out << "oracle      E " << format_short(oracle.value.e) << " members "
      << names(oracle.members) << "\n";
  out << "gap         " << format_short(greedy.value.e - oracle.value.e) << "\n";
  return 0;
}

}  // namespace aprl
