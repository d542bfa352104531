#include "aprl/exploration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace aprl {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

bool Clock::exhausted() const {
  if (iteration_mode()) return iterations >= *iteration_cap;
  return elapsed_seconds >= t_max_seconds;
}

double Clock::remaining_fraction() const {
  if (iteration_mode()) {
    if (*iteration_cap <= 0) return 0.0;
    double rest = static_cast<double>(*iteration_cap - iterations);
    return std::clamp(rest / static_cast<double>(*iteration_cap), 0.0, 1.0);
  }
  if (t_max_seconds <= 0.0) return 0.0;
  return std::clamp((t_max_seconds - elapsed_seconds) / t_max_seconds, 0.0, 1.0);
}

double Clock::consumed() const {
  return iteration_mode() ? static_cast<double>(iterations) : elapsed_seconds;
}

std::string Action::describe() const {
  switch (kind) {
    case Kind::apply_transform:
      return "transform:" + std::string(transform_name(transform)) + "@node" +
             std::to_string(data_node);
    case Kind::fit_estimator:
      return "fit:" + std::string(estimator_name(estimator)) + "@node" +
             std::to_string(data_node);
    case Kind::run_hpo:
      return "hpo:" + std::string(estimator_name(estimator)) + "@node" +
             std::to_string(data_node);
  }
  throw std::logic_error("unknown action kind");
}

bool operator==(const Action& a, const Action& b) {
  if (a.kind != b.kind || a.data_node != b.data_node) return false;
  if (a.kind == Action::Kind::apply_transform) return a.transform == b.transform;
  return a.estimator == b.estimator;
}

double reward(double prev_e_min, double new_e_min, double baseline) {
  if (baseline <= 1e-12) return 0.0;
  return (prev_e_min - new_e_min) / baseline;
}

std::vector<Action> enumerate_actions(const ExplorationTree& tree,
                                      const ExplorationConfig& cfg) {
  if (tree.data_nodes.empty()) return {};
  const TaskKind task = tree.data_nodes.front().data->target.task;

  auto logged = [&tree](const Action& a) {
    return std::find(tree.action_log.begin(), tree.action_log.end(), a) !=
           tree.action_log.end();
  };
  auto has_model = [&tree](int node, EstimatorId est, bool from_hpo) {
    for (const ModelNode& m : tree.model_nodes)
      if (m.data_node == node && m.estimator == est && m.from_hpo == from_hpo)
        return true;
    return false;
  };

  std::vector<Action> out;
  for (const DataNode& n : tree.data_nodes) {
    if (n.noop) continue;  // dead end: same rows as its parent

    if (n.depth < cfg.depth_cap) {
      for (TransformId t : transform_catalog()) {
        Action a{Action::Kind::apply_transform, n.id, t, EstimatorId::random_forest};
        if (!logged(a) && applicable(*n.data, t)) out.push_back(a);
      }
    }
    for (EstimatorId e : estimators_for(task)) {
      Action a{Action::Kind::fit_estimator, n.id, TransformId::freq, e};
      if (!logged(a) && !has_model(n.id, e, false)) out.push_back(a);
    }
    for (EstimatorId e : estimators_for(task)) {
      Action a{Action::Kind::run_hpo, n.id, TransformId::freq, e};
      if (!logged(a) && has_model(n.id, e, false) && !has_model(n.id, e, true))
        out.push_back(a);
    }
  }
  return out;
}

StateFeatures featurize(const ExplorationTree& tree, const Clock& clock,
                        const ExplorationConfig& cfg, const Action& action) {
  StateFeatures f{};
  f[0] = 1.0;

  double sum = 0.0, best = 0.0;
  int count = 0;
  for (const ModelNode& m : tree.model_nodes) {
    if (m.data_node != action.data_node) continue;
    double perf = 1.0 - m.prediction.cv_error;
    sum += perf;
    best = count == 0 ? perf : std::max(best, perf);
    ++count;
  }
  f[1] = count > 0 ? sum / count : 0.0;
  f[2] = count > 0 ? best : 0.0;

  if (action.kind != Action::Kind::apply_transform) {
    sum = 0.0;
    count = 0;
    for (const ModelNode& m : tree.model_nodes) {
      if (m.estimator != action.estimator) continue;
      sum += 1.0 - m.prediction.cv_error;
      ++count;
    }
    f[3] = count > 0 ? sum / count : 0.0;
  }

  if (action.kind == Action::Kind::apply_transform && tree.baseline_error > 1e-12) {
    // one gain sample per past application of this transform whose parent and
    // child both carry at least one model
    auto best_error = [&tree](int node) {
      double be = 0.0;
      int n = 0;
      for (const ModelNode& m : tree.model_nodes)
        if (m.data_node == node) {
          be = n == 0 ? m.prediction.cv_error : std::min(be, m.prediction.cv_error);
          ++n;
        }
      return n > 0 ? std::optional<double>(be) : std::nullopt;
    };
    sum = 0.0;
    count = 0;
    for (const DataNode& child : tree.data_nodes) {
      if (child.parent < 0 || child.noop || child.spec.id != action.transform) continue;
      auto child_err = best_error(child.id);
      auto parent_err = best_error(child.parent);
      if (!child_err || !parent_err) continue;
      double gain = (*parent_err - *child_err) / tree.baseline_error;
      sum += gain;
      best = count == 0 ? gain : std::max(best, gain);
      ++count;
    }
    f[4] = count > 0 ? sum / count : 0.0;
    f[5] = count > 0 ? best : 0.0;
  }

  f[6] = clock.remaining_fraction();
  f[7] = std::log1p(std::max(0.0, clock.t_max_seconds)) / std::log1p(7200.0);

  const Dataset& d = *tree.node(action.data_node).data;
  f[8] = std::min(1.0, std::log1p(static_cast<double>(d.numeric_count())) /
                           std::log1p(1000.0));
  f[9] = std::min(1.0, std::log1p(static_cast<double>(d.categorical_count())) /
                           std::log1p(1000.0));
  f[10] = d.has_datetime ? 1.0 : 0.0;
  f[11] = f[6] * f[1];
  f[12] = f[6] * f[2];
  f[13] = cfg.depth_cap > 0 ? static_cast<double>(tree.node(action.data_node).depth) /
                                  cfg.depth_cap
                            : 0.0;
  f[14] = action.kind == Action::Kind::apply_transform ? 1.0 : 0.0;
  f[15] = action.kind == Action::Kind::fit_estimator ? 1.0 : 0.0;
  f[16] = action.kind == Action::Kind::run_hpo ? 1.0 : 0.0;
  return f;
}

RunSession::RunSession(std::shared_ptr<const Dataset> train, Clock clock,
                       ExplorationConfig cfg, std::uint64_t seed)
    : train_(std::move(train)), clock_(clock), cfg_(cfg), rng_(seed) {
  if (!train_) throw std::invalid_argument("run needs a dataset");
  train_->validate();
  folds_ = make_folds(*train_, cfg_.k_folds, rng_.split("folds").next_u64());

  DataNode root;
  root.id = 0;
  root.data = train_;
  tree_.data_nodes.push_back(std::move(root));
  tree_.best_selection.value = EgeValue{std::numeric_limits<double>::infinity(),
                                        std::numeric_limits<double>::infinity(), 0.0};
}

void RunSession::fit_baseline() {
  if (baseline_ready_) throw std::logic_error("baseline already fitted");
  if (!clock_.iteration_mode() && clock_.t_max_seconds <= 0.0)
    throw std::invalid_argument("budget too small to fit the baseline model");
  if (clock_.iteration_mode() && *clock_.iteration_cap < 0)
    throw std::invalid_argument("budget too small to fit the baseline model");

  double t0 = now_seconds();
  EstimatorId base = estimators_for(train_->target.task).front();
  PredictionVector pv = cv_predict(base, default_params(base), *train_, folds_,
                                   rng_.split("baseline"), cfg_.exec);
  tree_.baseline_error = pv.cv_error;
  add_model_node(0, base, std::move(pv), default_params(base), false);

  std::vector<PredictionVector> cands{tree_.model_nodes.front().prediction};
  SelectOptions opts{cfg_.phi, cfg_.allow_drop, cfg_.exec};
  tree_.best_selection = greedy_select(cands, train_->target.values, opts);
  e_min_ = tree_.best_selection.value.e;

  if (!clock_.iteration_mode()) clock_.elapsed_seconds += now_seconds() - t0;
  baseline_ready_ = true;
}

Dataset RunSession::transformed_child(const DataNode& parent, TransformId t,
                                      TransformSpec& spec) const {
  std::vector<std::uint8_t> mask(train_->n_rows, 1);
  FitApplyResult fr = fit_apply(*parent.data, t, mask, cfg_.transform);
  spec = std::move(fr.spec);
  return std::move(fr.out);
}

std::vector<Action> RunSession::legal_actions() const {
  if (!baseline_ready_) throw std::logic_error("baseline not fitted yet");
  return enumerate_actions(tree_, cfg_);
}

StateFeatures RunSession::features_for(const Action& a) const {
  return featurize(tree_, clock_, cfg_, a);
}

void RunSession::add_model_node(int data_node, EstimatorId est, PredictionVector pv,
                                const HyperParams& hp, bool from_hpo) {
  ModelNode m;
  m.id = static_cast<int>(tree_.model_nodes.size());
  m.data_node = data_node;
  m.estimator = est;
  m.hyperparams = hp;
  m.from_hpo = from_hpo;
  pv.node_id = m.id;
  m.prediction = std::move(pv);
  tree_.model_nodes.push_back(std::move(m));
}

double RunSession::update_selection_and_reward() {
  double prev = e_min_;
  std::vector<PredictionVector> cands;
  cands.reserve(tree_.model_nodes.size());
  for (const ModelNode& m : tree_.model_nodes) cands.push_back(m.prediction);
  SelectOptions opts{cfg_.phi, cfg_.allow_drop, cfg_.exec};
  SelectionResult g = greedy_select(cands, train_->target.values, opts);
  if (g.value.e < tree_.best_selection.value.e) tree_.best_selection = std::move(g);
  e_min_ = std::min(e_min_, tree_.best_selection.value.e);
  return reward(prev, e_min_, tree_.baseline_error);
}

double RunSession::apply(const Action& a) {
  if (!baseline_ready_) throw std::logic_error("baseline not fitted yet");
  auto legal = legal_actions();
  if (std::find(legal.begin(), legal.end(), a) == legal.end())
    throw std::invalid_argument("action is not legal in the current tree");

  double t0 = now_seconds();
  std::uint64_t action_index = tree_.action_log.size();
  bool model_added = false;

  switch (a.kind) {
    case Action::Kind::apply_transform: {
      const DataNode& parent = tree_.node(a.data_node);
      TransformSpec spec;
      Dataset out = transformed_child(parent, a.transform, spec);
      DataNode child;
      child.id = static_cast<int>(tree_.data_nodes.size());
      child.parent = parent.id;
      child.depth = parent.depth + 1;
      child.noop = spec.noop;
      child.spec = std::move(spec);
      child.data = child.noop ? parent.data
                              : std::make_shared<const Dataset>(std::move(out));
      tree_.data_nodes.push_back(std::move(child));
      break;
    }
    case Action::Kind::fit_estimator: {
      const DataNode& node = tree_.node(a.data_node);
      PredictionVector pv = cv_predict(a.estimator, default_params(a.estimator),
                                       *node.data, folds_,
                                       rng_.split("action", action_index), cfg_.exec);
      add_model_node(a.data_node, a.estimator, std::move(pv),
                     default_params(a.estimator), false);
      model_added = true;
      break;
    }
    case Action::Kind::run_hpo: {
      const DataNode& node = tree_.node(a.data_node);
      HpoBudget budget;
      if (clock_.iteration_mode()) {
        budget.max_evals = cfg_.hpo_evals;
      } else {
        double remaining = std::max(0.0, clock_.t_max_seconds - clock_.elapsed_seconds);
        budget.seconds = std::max(cfg_.hpo_floor_seconds, cfg_.hpo_fraction * remaining);
      }
      std::optional<Incumbent> warm;
      auto it = incumbents_.find(a.estimator);
      if (it != incumbents_.end()) warm = it->second;
      HpoResult res = optimize(*node.data, a.estimator, folds_, budget, warm,
                               rng_.split("action", action_index), cfg_.exec);
      if (!res.timed_out) {
        incumbents_[a.estimator] = res.incumbent;
        HyperParams hp = res.best.hyperparams;
        add_model_node(a.data_node, a.estimator, std::move(res.best), hp, true);
        model_added = true;
      }
      break;
    }
  }

  tree_.action_log.push_back(a);
  double r = model_added ? update_selection_and_reward() : 0.0;

  if (clock_.iteration_mode())
    clock_.iterations += 1;
  else
    clock_.elapsed_seconds += now_seconds() - t0;

  StepLog log;
  log.index = static_cast<int>(steps_.size());
  log.action = a.describe();
  log.elapsed = clock_.consumed();
  log.e_min = e_min_;
  log.reward = r;
  steps_.push_back(std::move(log));
  return r;
}

std::vector<double> EnsembleMember::predict(const Dataset& raw) const {
  Dataset current = raw;
  for (const TransformSpec& spec : lineage) current = replay(spec, current);
  return model->predict(encoder.apply(current));
}

std::vector<double> RunResult::predict(const Dataset& raw) const {
  if (members.empty()) throw std::logic_error("run has no ensemble members");
  std::vector<double> mean(raw.n_rows, 0.0);
  for (const EnsembleMember& m : members) {
    std::vector<double> p = m.predict(raw);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += p[i];
  }
  for (double& v : mean) v /= static_cast<double>(members.size());
  return mean;
}

std::vector<double> RunResult::predict_baseline(const Dataset& raw) const {
  return baseline.predict(raw);
}

RunResult RunSession::finalize() {
  if (!baseline_ready_) throw std::logic_error("baseline not fitted yet");

  auto refit = [this](const ModelNode& m) {
    EnsembleMember em;
    em.model_node = m.id;
    em.data_node = m.data_node;
    em.estimator = m.estimator;
    em.hyperparams = m.hyperparams;
    em.cv_error = m.prediction.cv_error;
    em.from_hpo = m.from_hpo;
    for (int node = m.data_node; node > 0; node = tree_.node(node).parent)
      em.lineage.push_back(tree_.node(node).spec);
    std::reverse(em.lineage.begin(), em.lineage.end());

    const Dataset& d = *tree_.node(m.data_node).data;
    em.encoder = Encoder::fit(d);
    Matrix X = em.encoder.apply(d);
    em.model = std::shared_ptr<const Model>(
        fit(m.estimator, m.hyperparams, X, d.target.values,
            rng_.split("refit", static_cast<std::uint64_t>(m.id)), cfg_.exec));
    return em;
  };

  RunResult out;
  out.task = train_->target.task;
  out.steps = steps_;
  out.clock = clock_;
  for (int id : tree_.best_selection.members)
    out.members.push_back(refit(tree_.model_nodes.at(static_cast<std::size_t>(id))));
  out.baseline = refit(tree_.model_nodes.front());
  out.tree = std::move(tree_);
  return out;
}

RunResult run(std::shared_ptr<const Dataset> train, Clock clock,
              const PolicyWeights& policy, const ExplorationConfig& cfg,
              std::uint64_t seed) {
  RunSession session(std::move(train), clock, cfg, seed);
  session.fit_baseline();
  while (!session.exhausted()) {
    auto actions = session.legal_actions();
    if (actions.empty()) break;
    std::vector<StateFeatures> features;
    features.reserve(actions.size());
    for (const Action& a : actions) features.push_back(session.features_for(a));
    session.apply(actions[select_greedy(policy, features)]);
  }
  return session.finalize();
}

ExplorationEnv::ExplorationEnv(std::shared_ptr<const Dataset> train, Clock clock,
                               ExplorationConfig cfg)
    : train_(std::move(train)), clock_template_(clock), cfg_(std::move(cfg)) {}

void ExplorationEnv::reset(Rng rng) {
  session_ = std::make_unique<RunSession>(train_, clock_template_, cfg_, rng.next_u64());
  session_->fit_baseline();
  actions_fresh_ = false;
}

std::vector<StateFeatures> ExplorationEnv::action_features() {
  if (!session_ || session_->exhausted()) return {};
  actions_ = session_->legal_actions();
  actions_fresh_ = true;
  if (actions_.empty()) return {};
  std::vector<StateFeatures> out;
  out.reserve(actions_.size());
  for (const Action& a : actions_) out.push_back(session_->features_for(a));
  return out;
}

double ExplorationEnv::step(std::size_t action_index) {
  if (!session_ || !actions_fresh_ || action_index >= actions_.size())
    throw std::logic_error("step without a fresh action enumeration");
  actions_fresh_ = false;
  return session_->apply(actions_[action_index]);
}

PolicyWeights train_policy(const std::vector<CorpusEntry>& corpus,
                           const ExplorationConfig& cfg, const TrainOptions& options,
                           std::uint64_t seed) {
  if (corpus.empty()) throw std::invalid_argument("training corpus is empty");
  auto make_env = [corpus, cfg](long long episode) -> std::unique_ptr<QEnvironment> {
    const CorpusEntry& entry = corpus[static_cast<std::size_t>(episode) % corpus.size()];
    return std::make_unique<ExplorationEnv>(entry.data, entry.clock, cfg);
  };
  return train_q(make_env, options, seed);
}

}  // namespace aprl
