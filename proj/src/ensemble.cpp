#include "aprl/ensemble.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace aprl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mse(const std::vector<double>& v, const std::vector<double>& y) {
  double acc = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double d = v[i] - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(v.size());
}

void check_vector(const PredictionVector& p, std::size_t n_rows) {
  if (p.values.size() != n_rows)
    throw std::invalid_argument("ensemble: prediction length mismatch for node " +
                                std::to_string(p.node_id));
}

// Shared evaluation core: aggregates plus an optional extra member.
EgeValue value_with(const EnsembleAggregates& agg, const PredictionVector* extra,
                    const std::vector<double>& y) {
  std::size_t n = agg.row_sum.size();
  double m = static_cast<double>(agg.m + (extra ? 1 : 0));
  double err_sum = agg.sum_member_error + (extra ? mse(extra->values, y) : 0.0);

  double ambiguity = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = agg.row_sum[i] + (extra ? extra->values[i] : 0.0);
    double sq = agg.row_sumsq[i] + (extra ? extra->values[i] * extra->values[i] : 0.0);
    double mean = s / m;
    // clamp: sq/m - mean^2 is a variance and only dips below zero by rounding
    ambiguity += std::max(0.0, sq / m - mean * mean);
  }
  EgeValue v;
  v.e_bar = err_sum / m;
  v.a_bar = ambiguity / static_cast<double>(n);
  v.e = v.e_bar - v.a_bar;
  return v;
}

}  // namespace

EgeValue ensemble_error(const std::vector<const std::vector<double>*>& members,
                        const std::vector<double>& y) {
  if (members.empty()) return {kInf, kInf, 0.0};
  std::size_t n = y.size();
  double m = static_cast<double>(members.size());

  double e_bar = 0;
  for (const auto* v : members) {
    if (v->size() != n) throw std::invalid_argument("ensemble_error: length mismatch");
    e_bar += mse(*v, y);
  }
  e_bar /= m;

  double a_bar = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0;
    for (const auto* v : members) mean += (*v)[i];
    mean /= m;
    double spread = 0;
    for (const auto* v : members) {
      double d = (*v)[i] - mean;
      spread += d * d;
    }
    a_bar += spread / m;
  }
  a_bar /= static_cast<double>(n);
  return {e_bar - a_bar, e_bar, a_bar};
}

EnsembleAggregates make_aggregates(std::size_t n_rows) {
  EnsembleAggregates agg;
  agg.row_sum.assign(n_rows, 0.0);
  agg.row_sumsq.assign(n_rows, 0.0);
  return agg;
}

EgeValue aggregates_value(const EnsembleAggregates& agg, const std::vector<double>& y) {
  if (agg.m == 0) return {kInf, kInf, 0.0};
  if (agg.row_sum.size() != y.size())
    throw std::invalid_argument("aggregates_value: target length mismatch");
  return value_with(agg, nullptr, y);
}

EgeValue probe_member(const EnsembleAggregates& agg, const PredictionVector& p,
                      const std::vector<double>& y) {
  check_vector(p, agg.row_sum.size());
  return value_with(agg, &p, y);
}

EgeValue add_member(EnsembleAggregates& agg, const PredictionVector& p,
                    const std::vector<double>& y) {
  check_vector(p, agg.row_sum.size());
  for (int id : agg.members)
    if (id == p.node_id)
      throw std::invalid_argument("add_member: node " + std::to_string(p.node_id) +
                                  " already present");
  agg.m += 1;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    agg.row_sum[i] += p.values[i];
    agg.row_sumsq[i] += p.values[i] * p.values[i];
  }
  agg.sum_member_error += mse(p.values, y);
  agg.members.push_back(p.node_id);
  return value_with(agg, nullptr, y);
}

SelectionResult greedy_select(const std::vector<PredictionVector>& candidates,
                              const std::vector<double>& y, const SelectOptions& opt) {
  {
    std::set<int> ids;
    for (const auto& c : candidates) {
      check_vector(c, y.size());
      if (!ids.insert(c.node_id).second)
        throw std::invalid_argument("greedy_select: duplicate node id " +
                                    std::to_string(c.node_id));
    }
  }

  EnsembleAggregates agg = make_aggregates(y.size());
  double current_e = kInf;
  EgeValue current{kInf, kInf, 0.0};
  std::vector<std::size_t> remaining(candidates.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;

  while (!remaining.empty()) {
    std::vector<EgeValue> probes(remaining.size());
    parallel_for(opt.exec, remaining.size(), [&](std::size_t r) {
      probes[r] = probe_member(agg, candidates[remaining[r]], y);
    });

    std::size_t best = 0;
    for (std::size_t r = 1; r < remaining.size(); ++r) {
      int best_id = candidates[remaining[best]].node_id;
      int this_id = candidates[remaining[r]].node_id;
      if (probes[r].e < probes[best].e ||
          (probes[r].e == probes[best].e && this_id < best_id))
        best = r;
    }

    bool accept = agg.m == 0 || probes[best].e <= current_e + opt.phi;
    if (!accept) break;

    current = add_member(agg, candidates[remaining[best]], y);
    current_e = current.e;
    remaining.erase(remaining.begin() + static_cast<long>(best));

    if (opt.allow_drop && agg.m >= 2) {
      // One pass over the members in insertion order, removing any whose
      // absence lowers E.
      std::vector<int> snapshot = agg.members;
      for (int id : snapshot) {
        if (agg.m < 2) break;
        const PredictionVector* pv = nullptr;
        for (const auto& c : candidates)
          if (c.node_id == id) pv = &c;
        EnsembleAggregates without = agg;
        without.m -= 1;
        for (std::size_t i = 0; i < y.size(); ++i) {
          without.row_sum[i] -= pv->values[i];
          without.row_sumsq[i] -= pv->values[i] * pv->values[i];
        }
        without.sum_member_error -= mse(pv->values, y);
        without.members.erase(std::find(without.members.begin(), without.members.end(), id));
        EgeValue v = value_with(without, nullptr, y);
        if (v.e < current_e) {
          agg = std::move(without);
          current = v;
          current_e = v.e;
        }
      }
    }
  }

  return {agg.members, agg.m == 0 ? EgeValue{kInf, kInf, 0.0} : current};
}

SelectionResult brute_force_select(const std::vector<PredictionVector>& candidates,
                                   const std::vector<double>& y) {
  std::size_t n_cand = candidates.size();
  if (n_cand == 0) throw std::invalid_argument("brute_force_select: no candidates");
  if (n_cand > 20)
    throw std::invalid_argument("brute_force_select: too many candidates (max 20)");
  for (const auto& c : candidates) check_vector(c, y.size());

  std::size_t n = y.size();
  double nr = static_cast<double>(n);

  // Precompute the pieces of E(S) = (yy - 2/m * sum d + 1/m^2 * sum G) / n.
  double yy = 0;
  for (double v : y) yy += v * v;
  std::vector<double> d(n_cand, 0.0), member_mse(n_cand, 0.0);
  std::vector<double> G(n_cand * n_cand, 0.0);
  for (std::size_t a = 0; a < n_cand; ++a) {
    for (std::size_t i = 0; i < n; ++i) d[a] += y[i] * candidates[a].values[i];
    member_mse[a] = mse(candidates[a].values, y);
    for (std::size_t b = a; b < n_cand; ++b) {
      double g = 0;
      for (std::size_t i = 0; i < n; ++i)
        g += candidates[a].values[i] * candidates[b].values[i];
      G[a * n_cand + b] = G[b * n_cand + a] = g;
    }
  }

  std::size_t n_masks = std::size_t{1} << n_cand;
  std::vector<double> dot_sum(n_masks, 0.0), gram_sum(n_masks, 0.0), err_sum(n_masks, 0.0);
  std::size_t best_mask = 0;
  double best_e = kInf;

  for (std::size_t mask = 1; mask < n_masks; ++mask) {
    auto low = static_cast<std::size_t>(std::countr_zero(mask));
    std::size_t prev = mask & (mask - 1);
    double cross = 0;
    for (std::size_t rest = prev; rest; rest &= rest - 1)
      cross += G[low * n_cand + static_cast<std::size_t>(std::countr_zero(rest))];
    dot_sum[mask] = dot_sum[prev] + d[low];
    gram_sum[mask] = gram_sum[prev] + 2.0 * cross + G[low * n_cand + low];
    err_sum[mask] = err_sum[prev] + member_mse[low];

    double m = static_cast<double>(std::popcount(mask));
    double e = (yy - 2.0 / m * dot_sum[mask] + gram_sum[mask] / (m * m)) / nr;
    if (e < best_e) {
      best_e = e;
      best_mask = mask;
    } else if (e == best_e) {
      // lexicographically smallest sorted id set wins
      auto ids_of = [&](std::size_t mk) {
        std::vector<int> ids;
        for (std::size_t a = 0; a < n_cand; ++a)
          if (mk >> a & 1) ids.push_back(candidates[a].node_id);
        std::sort(ids.begin(), ids.end());
        return ids;
      };
      if (ids_of(mask) < ids_of(best_mask)) best_mask = mask;
    }
  }

  SelectionResult result;
  for (std::size_t a = 0; a < n_cand; ++a)
    if (best_mask >> a & 1) result.members.push_back(candidates[a].node_id);
  std::sort(result.members.begin(), result.members.end());
  double m = static_cast<double>(std::popcount(best_mask));
  result.value.e = best_e;
  result.value.e_bar = err_sum[best_mask] / m;
  result.value.a_bar = result.value.e_bar - best_e;
  return result;
}

}  // namespace aprl
