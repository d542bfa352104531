#pragma once

#include <cstddef>
#include <vector>

#include "aprl/estimators.hpp"
#include "aprl/parallel.hpp"

namespace aprl {

// Ensemble generalization error decomposed as E = mean member error minus
// mean member ambiguity (spread around the equal-weight mean prediction).
// E equals the squared error of the averaged prediction itself, which is
// what makes diverse-but-wrong members worth keeping.
struct EgeValue {
  double e = 0;      // ensemble generalization error
  double e_bar = 0;  // mean member squared error
  double a_bar = 0;  // mean member ambiguity
};

// Definition-level computation straight from the member vectors.
EgeValue ensemble_error(const std::vector<const std::vector<double>*>& members,
                        const std::vector<double>& y);

// O(n_rows) running aggregates: enough state to evaluate the current
// ensemble and any one-member extension without touching the other members.
struct EnsembleAggregates {
  std::size_t m = 0;                // member count
  std::vector<double> row_sum;      // per-row sum of member predictions
  std::vector<double> row_sumsq;    // per-row sum of squared predictions
  double sum_member_error = 0;      // sum of member mean squared errors
  std::vector<int> members;         // node ids in insertion order
};

EnsembleAggregates make_aggregates(std::size_t n_rows);

// Value of the ensemble currently held in the aggregates (m >= 1).
EgeValue aggregates_value(const EnsembleAggregates& agg, const std::vector<double>& y);

// Value the ensemble would have with p added; does not modify agg.
EgeValue probe_member(const EnsembleAggregates& agg, const PredictionVector& p,
                      const std::vector<double>& y);

// Adds p and returns the new value. Rejects duplicates and length mismatches.
EgeValue add_member(EnsembleAggregates& agg, const PredictionVector& p,
                    const std::vector<double>& y);

struct SelectOptions {
  double phi = 0.0;        // acceptance slack: accept when E' <= E + phi
  bool allow_drop = false; // after each addition, one pass dropping members that hurt
  Exec exec = Exec::serial;
};

struct SelectionResult {
  std::vector<int> members;  // node ids; insertion order for greedy, ascending for brute force
  EgeValue value;
};

// Greedy forward selection: repeatedly probe every unused candidate, take the
// argmin (ties to the lower node id), stop when the best extension no longer
// satisfies the acceptance rule. The empty ensemble has E = +infinity, so the
// first pick is always accepted.
SelectionResult greedy_select(const std::vector<PredictionVector>& candidates,
                              const std::vector<double>& y, const SelectOptions& opt = {});

// Exact optimum over all non-empty subsets (candidates.size() <= 20). Ties
// resolve to the lexicographically smallest sorted id set. Evaluates subsets
// through Gram-matrix algebra, deliberately sharing no code with the greedy
// path so the two can check each other.
SelectionResult brute_force_select(const std::vector<PredictionVector>& candidates,
                                   const std::vector<double>& y);

}  // namespace aprl
