#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "aprl/dataset.hpp"
#include "aprl/estimators.hpp"
#include "aprl/parallel.hpp"
#include "aprl/rng.hpp"

namespace aprl {

// Best configuration seen so far for one estimator, carried across searches
// within a run so later searches on the same estimator start warm.
struct Incumbent {
  EstimatorId estimator = EstimatorId::random_forest;
  HyperParams best_hp;
  double best_cv_error = std::numeric_limits<double>::infinity();
};

// Either a wall-clock box or a fixed evaluation count. When max_evals is set
// the search runs exactly that many evaluations and charges no wall time,
// which keeps replayed runs byte-identical across machines.
struct HpoBudget {
  double seconds = 0.0;
  std::optional<int> max_evals;
};

struct HpoEvaluation {
  HyperParams params;
  double cv_error = 0.0;
};

struct HpoResult {
  // True when the budget was spent before any evaluation completed; best and
  // incumbent are meaningless in that case and the caller treats the whole
  // action as a no-op.
  bool timed_out = false;
  PredictionVector best;
  Incumbent incumbent;
  std::vector<HpoEvaluation> evaluations;
  double elapsed_seconds = 0.0;
};

// Searches the estimator's hyper-parameter space on one dataset: evaluates
// the default point, then the incumbent point (when present and distinct),
// then alternates uniform-random draws with Gaussian perturbations of the
// best point so far (sigma = 10% of each numeric range, log-space for
// log-scaled parameters, categoricals held at the best value). An evaluation
// started inside the budget always finishes. The returned best is never
// worse than the evaluated default, and the returned incumbent's
// best_cv_error never increases across calls that thread it through.
HpoResult optimize(const Dataset& d, EstimatorId id, const FoldPlan& folds,
                   const HpoBudget& budget,
                   const std::optional<Incumbent>& incumbent, const Rng& rng,
                   Exec exec = Exec::serial);

}  // namespace aprl
