#include "aprl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace aprl {

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: scores and labels differ in length");
  std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) throw std::invalid_argument("auc: labels must be 0/1");
    n_pos += y == 1.0;
  }
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: needs both classes present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks across tied score runs, accumulate ranks of positives.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t)
      if (labels[order[t]] == 1.0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  double n_pos_d = static_cast<double>(n_pos);
  return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) / 2.0) /
         (n_pos_d * static_cast<double>(n_neg));
}

double rmse(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("rmse: lengths differ");
  if (predictions.empty()) throw std::invalid_argument("rmse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    double d = predictions[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

double holdout_metric(std::span<const double> predictions, std::span<const double> truth,
                      TaskKind task) {
  return task == TaskKind::binary_classification ? auc(predictions, truth)
                                                 : rmse(predictions, truth);
}

std::optional<double> error_reduction(double baseline_metric, double optimized_metric,
                                      TaskKind task) {
  if (task == TaskKind::binary_classification) {
    double denom = 1.0 - baseline_metric;
    if (denom == 0.0) return std::nullopt;
    return (optimized_metric - baseline_metric) / denom;
  }
  if (baseline_metric == 0.0) return std::nullopt;
  return (baseline_metric - optimized_metric) / baseline_metric;
}

}  // namespace aprl
