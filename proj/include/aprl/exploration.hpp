#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aprl/dataset.hpp"
#include "aprl/ensemble.hpp"
#include "aprl/estimators.hpp"
#include "aprl/hpo.hpp"
#include "aprl/parallel.hpp"
#include "aprl/policy.hpp"
#include "aprl/rng.hpp"
#include "aprl/transforms.hpp"

namespace aprl {

struct ExplorationConfig {
  int depth_cap = 4;        // max chained transforms per lineage
  int k_folds = 5;          // folds behind every cv_error in the tree
  double hpo_fraction = 0.1;
  double hpo_floor_seconds = 2.0;
  int hpo_evals = 4;        // fixed evaluation count in iteration mode
  double phi = 0.0;         // greedy selection slack
  bool allow_drop = false;  // greedy selection drop pass
  TransformConfig transform;
  Exec exec = Exec::serial;
};

// Budget for one run. Wall mode charges measured seconds per action;
// iteration mode (cap set) charges one unit per action and never reads the
// wall clock, which makes runs bit-deterministic.
struct Clock {
  double t_max_seconds = 0.0;
  std::optional<long long> iteration_cap;
  double elapsed_seconds = 0.0;
  long long iterations = 0;

  bool iteration_mode() const { return iteration_cap.has_value(); }
  bool exhausted() const;
  // rho: fraction of the budget still open, in [0,1]
  double remaining_fraction() const;
  // budget consumed so far in the unit of the active mode
  double consumed() const;
};

struct Action {
  enum class Kind { apply_transform, fit_estimator, run_hpo };
  Kind kind = Kind::fit_estimator;
  int data_node = 0;
  TransformId transform = TransformId::freq;           // apply_transform only
  EstimatorId estimator = EstimatorId::random_forest;  // fit_estimator / run_hpo

  // e.g. "transform:pca@node0", "fit:knn@node2", "hpo:random_forest@node0"
  std::string describe() const;
  friend bool operator==(const Action& a, const Action& b);
};

struct DataNode {
  int id = 0;
  std::shared_ptr<const Dataset> data;
  int parent = -1;        // -1 for the root
  TransformSpec spec;     // how it was derived (root: untouched default)
  int depth = 0;
  bool noop = false;      // fit found nothing to do; node is a dead end
};

struct ModelNode {
  int id = 0;
  int data_node = 0;
  EstimatorId estimator = EstimatorId::random_forest;
  HyperParams hyperparams;
  PredictionVector prediction;  // prediction.node_id == id
  bool from_hpo = false;
};

struct ExplorationTree {
  std::vector<DataNode> data_nodes;
  std::vector<ModelNode> model_nodes;
  std::vector<Action> action_log;
  SelectionResult best_selection;  // lowest-E member set seen so far
  double baseline_error = 0.0;     // E of the default-estimator root model

  const DataNode& node(int id) const { return data_nodes.at(static_cast<std::size_t>(id)); }
};

struct StepLog {
  int index = 0;
  std::string action;
  double elapsed = 0.0;  // seconds, or iterations in iteration mode
  double e_min = 0.0;
  double reward = 0.0;
};

// r = (prev - next) / baseline; 0 for a degenerate (<= 1e-12) baseline.
double reward(double prev_e_min, double new_e_min, double baseline);

std::vector<Action> enumerate_actions(const ExplorationTree& tree,
                                      const ExplorationConfig& cfg);

StateFeatures featurize(const ExplorationTree& tree, const Clock& clock,
                        const ExplorationConfig& cfg, const Action& action);

// One selected member refit on all training rows, replayable on raw rows
// that share the root schema.
struct EnsembleMember {
  int model_node = -1;
  int data_node = -1;
  EstimatorId estimator = EstimatorId::random_forest;
  HyperParams hyperparams;
  double cv_error = 0.0;
  bool from_hpo = false;
  std::vector<TransformSpec> lineage;  // root-to-node order
  Encoder encoder;
  std::shared_ptr<const Model> model;

  std::vector<double> predict(const Dataset& raw) const;
};

struct RunResult {
  TaskKind task = TaskKind::binary_classification;
  ExplorationTree tree;
  std::vector<StepLog> steps;
  Clock clock;
  std::vector<EnsembleMember> members;  // best selection, acceptance order
  EnsembleMember baseline;

  // equal-weight mean of member predictions (positive-class probability for
  // classification)
  std::vector<double> predict(const Dataset& raw) const;
  std::vector<double> predict_baseline(const Dataset& raw) const;
};

// Owns one exploration in progress; run() drives it greedily, the Q-learning
// adapter drives it step by step.
class RunSession {
 public:
  RunSession(std::shared_ptr<const Dataset> train, Clock clock, ExplorationConfig cfg,
             std::uint64_t seed);

  // Fits the default estimator on the root to define the baseline error.
  // Throws budget-too-small when the wall budget is not positive.
  void fit_baseline();

  bool exhausted() const { return clock_.exhausted(); }
  const ExplorationTree& tree() const { return tree_; }
  const Clock& clock() const { return clock_; }

  std::vector<Action> legal_actions() const;
  StateFeatures features_for(const Action& a) const;

  // Applies one legal action, charges the clock, appends to the step log,
  // and returns the immediate reward.
  double apply(const Action& a);

  RunResult finalize();

 private:
  Dataset transformed_child(const DataNode& parent, TransformId t, TransformSpec& spec) const;
  void add_model_node(int data_node, EstimatorId est, PredictionVector pv,
                      const HyperParams& hp, bool from_hpo);
  double update_selection_and_reward();

  std::shared_ptr<const Dataset> train_;
  Clock clock_;
  ExplorationConfig cfg_;
  Rng rng_;
  FoldPlan folds_;
  ExplorationTree tree_;
  std::vector<StepLog> steps_;
  std::map<EstimatorId, Incumbent> incumbents_;
  double e_min_ = 0.0;
  bool baseline_ready_ = false;
};

// Full greedy run with the given policy (epsilon is ignored; deployment is
// greedy).
RunResult run(std::shared_ptr<const Dataset> train, Clock clock,
              const PolicyWeights& policy, const ExplorationConfig& cfg,
              std::uint64_t seed);

// Adapter exposing a run as an episodic environment for train_q.
class ExplorationEnv : public QEnvironment {
 public:
  ExplorationEnv(std::shared_ptr<const Dataset> train, Clock clock, ExplorationConfig cfg);

  void reset(Rng rng) override;
  std::vector<StateFeatures> action_features() override;
  double step(std::size_t action_index) override;

 private:
  std::shared_ptr<const Dataset> train_;
  Clock clock_template_;
  ExplorationConfig cfg_;
  std::unique_ptr<RunSession> session_;
  std::vector<Action> actions_;
  bool actions_fresh_ = false;
};

struct CorpusEntry {
  std::shared_ptr<const Dataset> data;
  Clock clock;  // budget used for this dataset's episodes
};

// Round-robin epsilon-greedy training over a corpus of datasets.
PolicyWeights train_policy(const std::vector<CorpusEntry>& corpus,
                           const ExplorationConfig& cfg, const TrainOptions& options,
                           std::uint64_t seed);

}  // namespace aprl
