#include <doctest.h>

#include <cmath>
#include <limits>

#include "aprl/hpo.hpp"
#include "helpers.hpp"

using namespace aprl;
using namespace test_helpers;

namespace {

HpoBudget evals(int n) {
  HpoBudget b;
  b.max_evals = n;
  return b;
}

// Grid points with a duplicated twin per point; one twin in five carries a
// flipped label. Nearest-neighbor lookups latch onto the zero-distance twin
// and inherit its noise, while larger neighborhoods vote it away.
Dataset noisy_twin_dataset() {
  std::vector<double> xs;
  std::vector<double> ys;
  const int m = 25;
  for (int j = 0; j < m; ++j) {
    double x = static_cast<double>(j) / (m - 1);
    double label = x > 0.5 ? 1.0 : 0.0;
    xs.push_back(x);
    ys.push_back(label);
    xs.push_back(x);
    ys.push_back(j % 5 == 2 ? 1.0 - label : label);
  }
  return make_dataset({num_col("x", xs)}, ys, TaskKind::binary_classification, "twins");
}

}  // namespace

TEST_CASE("non-positive budgets time out without evaluating") {
  auto d = separable_classification(24, 5);
  auto folds = make_folds(d, 3, 1);

  HpoBudget wall;
  wall.seconds = 0.0;
  auto r = optimize(d, EstimatorId::logistic_regression, folds, wall, std::nullopt, Rng(1));
  CHECK(r.timed_out);
  CHECK(r.evaluations.empty());

  auto r2 = optimize(d, EstimatorId::logistic_regression, folds, evals(0), std::nullopt, Rng(1));
  CHECK(r2.timed_out);
}

TEST_CASE("single evaluation returns the default point") {
  auto d = separable_classification(24, 5);
  auto folds = make_folds(d, 3, 1);
  auto r = optimize(d, EstimatorId::knn, folds, evals(1), std::nullopt, Rng(2));
  CHECK_FALSE(r.timed_out);
  REQUIRE(r.evaluations.size() == 1);
  CHECK(r.best.hyperparams == default_params(EstimatorId::knn));
  CHECK(r.incumbent.best_hp == default_params(EstimatorId::knn));
  CHECK(r.incumbent.best_cv_error == r.best.cv_error);
}

TEST_CASE("evaluation order is default, incumbent, then samples") {
  auto d = separable_classification(24, 5);
  auto folds = make_folds(d, 3, 1);

  Incumbent warm;
  warm.estimator = EstimatorId::knn;
  warm.best_hp = default_params(EstimatorId::knn);
  warm.best_hp["k"] = HpValue(11.0);
  warm.best_cv_error = 0.9;

  auto r = optimize(d, EstimatorId::knn, folds, evals(4), warm, Rng(3));
  REQUIRE(r.evaluations.size() == 4);
  CHECK(r.evaluations[0].params == default_params(EstimatorId::knn));
  CHECK(r.evaluations[1].params == warm.best_hp);

  // an incumbent identical to the default is not evaluated twice
  Incumbent same;
  same.estimator = EstimatorId::knn;
  same.best_hp = default_params(EstimatorId::knn);
  same.best_cv_error = 0.9;
  auto r2 = optimize(d, EstimatorId::knn, folds, evals(2), same, Rng(3));
  REQUIRE(r2.evaluations.size() == 2);
  CHECK(r2.evaluations[0].params == default_params(EstimatorId::knn));
  CHECK_FALSE(r2.evaluations[1].params == default_params(EstimatorId::knn));
}

TEST_CASE("best never trails the default or any logged evaluation") {
  auto d = separable_classification(30, 7);
  auto folds = make_folds(d, 5, 2);
  for (auto id : {EstimatorId::random_forest, EstimatorId::logistic_regression,
                  EstimatorId::knn}) {
    auto r = optimize(d, id, folds, evals(6), std::nullopt, Rng(11));
    REQUIRE(r.evaluations.size() == 6);
    CHECK(r.best.cv_error <= r.evaluations[0].cv_error);
    for (const auto& e : r.evaluations) {
      CHECK(r.best.cv_error <= e.cv_error);
      CHECK_NOTHROW(validate_params(id, e.params));
    }
  }
}

TEST_CASE("gaussian samples keep the categorical of the current best") {
  auto d = separable_classification(24, 5);
  auto folds = make_folds(d, 3, 1);
  auto r = optimize(d, EstimatorId::knn, folds, evals(3), std::nullopt, Rng(17));
  REQUIRE(r.evaluations.size() == 3);
  // evaluations: default, uniform draw, gaussian perturbation of the better
  // of the first two
  const auto& best_of_two = r.evaluations[0].cv_error <= r.evaluations[1].cv_error
                                ? r.evaluations[0].params
                                : r.evaluations[1].params;
  CHECK(r.evaluations[2].params.at("weighting") == best_of_two.at("weighting"));
}

TEST_CASE("incumbent error is non-increasing across threaded calls") {
  auto d = separable_classification(30, 7);
  auto folds = make_folds(d, 5, 2);

  std::optional<Incumbent> inc;
  double prev = std::numeric_limits<double>::infinity();
  for (int call = 0; call < 3; ++call) {
    auto r = optimize(d, EstimatorId::knn, folds, evals(4), inc, Rng(100 + call));
    CHECK(r.incumbent.best_cv_error <= prev);
    prev = r.incumbent.best_cv_error;
    inc = r.incumbent;
  }

  // an unbeatable incoming incumbent is kept verbatim
  Incumbent gold;
  gold.estimator = EstimatorId::knn;
  gold.best_hp = default_params(EstimatorId::knn);
  gold.best_hp["k"] = HpValue(3.0);
  gold.best_cv_error = 0.0;
  auto r = optimize(d, EstimatorId::knn, folds, evals(4), gold, Rng(9));
  CHECK(r.incumbent.best_hp == gold.best_hp);
  CHECK(r.incumbent.best_cv_error == 0.0);
}

TEST_CASE("mismatched incumbent estimator is rejected") {
  auto d = separable_classification(24, 5);
  auto folds = make_folds(d, 3, 1);
  Incumbent wrong;
  wrong.estimator = EstimatorId::logistic_regression;
  wrong.best_hp = default_params(EstimatorId::logistic_regression);
  wrong.best_cv_error = 0.1;
  CHECK_THROWS(optimize(d, EstimatorId::knn, folds, evals(2), wrong, Rng(1)));
}

TEST_CASE("same seed reproduces the whole evaluation log") {
  auto d = separable_classification(30, 7);
  auto folds = make_folds(d, 5, 2);
  auto a = optimize(d, EstimatorId::random_forest, folds, evals(5), std::nullopt, Rng(42));
  auto b = optimize(d, EstimatorId::random_forest, folds, evals(5), std::nullopt, Rng(42));
  REQUIRE(a.evaluations.size() == b.evaluations.size());
  for (std::size_t i = 0; i < a.evaluations.size(); ++i) {
    CHECK(a.evaluations[i].params == b.evaluations[i].params);
    CHECK(a.evaluations[i].cv_error == b.evaluations[i].cv_error);
  }
  CHECK(a.best.values == b.best.values);
}

TEST_CASE("wall-clock budget always finishes the first evaluation") {
  auto d = separable_classification(24, 5);
  auto folds = make_folds(d, 3, 1);
  HpoBudget tight;
  tight.seconds = 1e-9;
  auto r = optimize(d, EstimatorId::knn, folds, tight, std::nullopt, Rng(1));
  CHECK_FALSE(r.timed_out);
  CHECK(r.evaluations.size() >= 1);
  CHECK(r.elapsed_seconds >= 0.0);
}

TEST_CASE("nearest-neighbor overfit on noisy twins is searched away") {
  auto d = noisy_twin_dataset();
  auto folds = make_folds(d, 5, 3);

  auto k1 = default_params(EstimatorId::knn);
  k1["k"] = HpValue(1.0);
  auto pv1 = cv_predict(EstimatorId::knn, k1, d, folds, Rng(0).split("probe"));
  auto pv5 = cv_predict(EstimatorId::knn, default_params(EstimatorId::knn), d, folds,
                        Rng(0).split("probe"));
  REQUIRE(pv1.cv_error > pv5.cv_error);  // scenario premise: k=1 memorizes noise

  Incumbent seed_k1;
  seed_k1.estimator = EstimatorId::knn;
  seed_k1.best_hp = k1;
  seed_k1.best_cv_error = std::numeric_limits<double>::max();
  auto r = optimize(d, EstimatorId::knn, folds, evals(6), seed_k1, Rng(12));

  bool saw_k1 = false;
  double k1_err = 0.0;
  for (const auto& e : r.evaluations) {
    if (e.params.at("k").number == 1.0) {
      saw_k1 = true;
      k1_err = e.cv_error;
      break;
    }
  }
  REQUIRE(saw_k1);
  CHECK(r.best.hyperparams.at("k").number > 1.0);
  CHECK(r.best.cv_error < k1_err);
}
