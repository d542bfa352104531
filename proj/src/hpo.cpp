#include "aprl/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace aprl {

namespace {

double clamp_to(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

HpValue uniform_value(const ParamSpec& p, Rng& rng) {
  switch (p.kind) {
    case ParamSpec::Kind::integer:
      return HpValue(static_cast<double>(
          rng.uniform_int(static_cast<long long>(p.lo), static_cast<long long>(p.hi))));
    case ParamSpec::Kind::real:
      return HpValue(p.lo + rng.uniform() * (p.hi - p.lo));
    case ParamSpec::Kind::log_real: {
      double lv = std::log(p.lo) + rng.uniform() * (std::log(p.hi) - std::log(p.lo));
      return HpValue(clamp_to(std::exp(lv), p.lo, p.hi));
    }
    case ParamSpec::Kind::categorical:
      return HpValue(p.options[rng.below(p.options.size())]);
  }
  throw std::logic_error("unknown parameter kind");
}

HpValue perturbed_value(const ParamSpec& p, const HpValue& best, Rng& rng) {
  constexpr double kSigmaFraction = 0.1;
  switch (p.kind) {
    case ParamSpec::Kind::integer: {
      double v = best.number + rng.normal() * kSigmaFraction * (p.hi - p.lo);
      return HpValue(clamp_to(std::round(v), p.lo, p.hi));
    }
    case ParamSpec::Kind::real: {
      double v = best.number + rng.normal() * kSigmaFraction * (p.hi - p.lo);
      return HpValue(clamp_to(v, p.lo, p.hi));
    }
    case ParamSpec::Kind::log_real: {
      double lv = std::log(best.number) +
                  rng.normal() * kSigmaFraction * (std::log(p.hi) - std::log(p.lo));
      return HpValue(clamp_to(std::exp(lv), p.lo, p.hi));
    }
    case ParamSpec::Kind::categorical:
      return best;
  }
  throw std::logic_error("unknown parameter kind");
}

HyperParams sample_uniform(const std::vector<ParamSpec>& space, Rng& rng) {
  HyperParams hp;
  for (const auto& p : space) hp.emplace(p.name, uniform_value(p, rng));
  return hp;
}

HyperParams sample_near(const std::vector<ParamSpec>& space, const HyperParams& best,
                        Rng& rng) {
  HyperParams hp;
  for (const auto& p : space) hp.emplace(p.name, perturbed_value(p, best.at(p.name), rng));
  return hp;
}

}  // namespace

HpoResult optimize(const Dataset& d, EstimatorId id, const FoldPlan& folds,
                   const HpoBudget& budget,
                   const std::optional<Incumbent>& incumbent, const Rng& rng,
                   Exec exec) {
  if (incumbent && incumbent->estimator != id)
    throw std::invalid_argument("incumbent belongs to a different estimator");

  HpoResult result;
  const bool iteration_mode = budget.max_evals.has_value();
  if (iteration_mode ? *budget.max_evals <= 0 : budget.seconds <= 0.0) {
    result.timed_out = true;
    return result;
  }

  const auto space = param_space(id);

  // Deterministic prefix: default first, then the warm-start point when it
  // differs. Candidates after that are generated lazily inside the loop.
  std::vector<HyperParams> prefix;
  prefix.push_back(default_params(id));
  if (incumbent && incumbent->best_hp != prefix.front()) {
    validate_params(id, incumbent->best_hp);
    prefix.push_back(incumbent->best_hp);
  }

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  std::size_t eval_index = 0;
  std::size_t stochastic_index = 0;
  double best_error = std::numeric_limits<double>::infinity();

  auto budget_open = [&] {
    if (iteration_mode) return eval_index < static_cast<std::size_t>(*budget.max_evals);
    return eval_index == 0 || elapsed() < budget.seconds;
  };

  while (budget_open()) {
    HyperParams hp;
    if (eval_index < prefix.size()) {
      hp = prefix[eval_index];
    } else {
      Rng gen = rng.split("gen", stochastic_index);
      const HyperParams& anchor =
          best_error < std::numeric_limits<double>::infinity() ? result.best.hyperparams
                                                               : prefix.front();
      hp = (stochastic_index % 2 == 0) ? sample_uniform(space, gen)
                                       : sample_near(space, anchor, gen);
      ++stochastic_index;
    }

    PredictionVector pv = cv_predict(id, hp, d, folds, rng.split("eval", eval_index), exec);
    result.evaluations.push_back({hp, pv.cv_error});
    if (pv.cv_error < best_error) {
      best_error = pv.cv_error;
      result.best = std::move(pv);
    }
    ++eval_index;
  }

  result.elapsed_seconds = elapsed();

  // The incumbent keeps whichever configuration has the lower score, so its
  // best_cv_error is non-increasing when threaded through successive calls.
  if (incumbent && incumbent->best_cv_error <= best_error) {
    result.incumbent = *incumbent;
  } else {
    result.incumbent = Incumbent{id, result.best.hyperparams, best_error};
  }
  return result;
}

}  // namespace aprl
