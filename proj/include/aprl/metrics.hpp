#pragma once

#include <optional>
#include <span>

#include "aprl/dataset.hpp"

namespace aprl {

// Rank-based AUC (Mann-Whitney with average ranks for tied scores).
// Labels must be 0/1 with both classes present.
double auc(std::span<const double> scores, std::span<const double> labels);

double rmse(std::span<const double> predictions, std::span<const double> truth);

// Holdout quality on the task's headline metric: AUC for classification
// (higher is better), RMSE for regression (lower is better).
double holdout_metric(std::span<const double> predictions, std::span<const double> truth,
                      TaskKind task);

// Relative improvement of the optimized model over the baseline:
// classification (opt - base) / (1 - base), regression (base - opt) / base.
// Returns nullopt when the denominator is zero.
std::optional<double> error_reduction(double baseline_metric, double optimized_metric,
                                      TaskKind task);

}  // namespace aprl
