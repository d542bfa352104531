#include <doctest.h>

#include <cmath>
#include <vector>

#include "aprl/metrics.hpp"
#include "aprl/rng.hpp"

using namespace aprl;

namespace {

// Independent AUC oracle: count concordant positive/negative pairs directly,
// half credit for ties.
double pairwise_auc(const std::vector<double>& s, const std::vector<double>& y) {
  double num = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0) continue;
      ++pairs;
      if (s[i] > s[j])
        num += 1.0;
      else if (s[i] == s[j])
        num += 0.5;
    }
  }
  return num / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("auc on a worked example") {
  std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  std::vector<double> y{0, 0, 1, 1};
  CHECK(auc(s, y) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auc matches the pairwise oracle with heavy ties") {
  Rng rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t n = 10 + rng.below(60);
    std::vector<double> s(n), y(n);
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(8)) / 4.0;  // few distinct scores -> many ties
      y[i] = rng.below(2) ? 1.0 : 0.0;
      (y[i] == 1.0 ? has1 : has0) = true;
    }
    if (!has0 || !has1) {
      y[0] = 0.0;
      y[n - 1] = 1.0;
    }
    CHECK(std::abs(auc(s, y) - pairwise_auc(s, y)) <= 1e-12);
  }
}

TEST_CASE("auc input validation") {
  CHECK_THROWS(auc(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 1}));
  CHECK_THROWS(auc(std::vector<double>{0.5}, std::vector<double>{0, 1}));
  CHECK_THROWS(auc(std::vector<double>{0.5, 0.5}, std::vector<double>{0, 2}));
}

TEST_CASE("rmse on a worked example") {
  std::vector<double> p{0, 0};
  std::vector<double> y{3, 4};
  CHECK(rmse(p, y) == doctest::Approx(2.5 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK_THROWS(rmse(std::vector<double>{}, std::vector<double>{}));
}

TEST_CASE("error reduction formulas and undefined cases") {
  auto cls = error_reduction(0.5, 0.8823, TaskKind::binary_classification);
  REQUIRE(cls.has_value());
  CHECK(*cls == doctest::Approx(0.7646).epsilon(1e-12));
  CHECK_FALSE(error_reduction(1.0, 1.0, TaskKind::binary_classification).has_value());

  auto reg = error_reduction(2.0, 0.5, TaskKind::regression);
  REQUIRE(reg.has_value());
  CHECK(*reg == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_FALSE(error_reduction(0.0, 0.5, TaskKind::regression).has_value());
}
