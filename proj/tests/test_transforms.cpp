#include <doctest.h>

#include <cmath>

#include "aprl/transforms.hpp"
#include "helpers.hpp"

using namespace aprl;
using test_helpers::cat_col;
using test_helpers::make_dataset;
using test_helpers::num_col;

namespace {

Dataset cls4(std::vector<FeatureColumn> cols) {
  return make_dataset(std::move(cols), {0, 1, 0, 1}, TaskKind::binary_classification);
}

}  // namespace

TEST_CASE("freq counts categories and discrete numerics") {
  Dataset d = make_dataset({cat_col("c", {"a", "b", "a", "c", "a"}),
                            num_col("k", {1, 2, 1, 3, 1}),
                            num_col("x", {0.5, 1.5, 2.5, 3.5, 4.5})},
                           {0, 1, 0, 1, 0}, TaskKind::binary_classification);
  auto [out, spec] = fit_apply(d, TransformId::freq);
  CHECK_FALSE(spec.noop);
  REQUIRE(out.find("c~freq") != nullptr);
  CHECK(out.find("c~freq")->numeric == std::vector<double>{3, 1, 3, 1, 3});
  REQUIRE(out.find("k~freq") != nullptr);
  CHECK(out.find("k~freq")->numeric == std::vector<double>{3, 1, 3, 1, 3});
  CHECK(out.find("x~freq") == nullptr);  // non-integral numeric is not discrete

  // unseen values at replay count zero
  Dataset fresh = make_dataset({cat_col("c", {"a", "z", "b", "z"}),
                                num_col("k", {1, 9, 9, 2}),
                                num_col("x", {1, 2, 3, 4})},
                               {0, 1, 0, 1}, TaskKind::binary_classification);
  Dataset replayed = replay(spec, fresh);
  CHECK(replayed.find("c~freq")->numeric == std::vector<double>{3, 0, 1, 0});
  CHECK(replayed.find("k~freq")->numeric == std::vector<double>{3, 0, 0, 1});
}

TEST_CASE("freq distinct cap excludes wide discrete columns") {
  std::vector<double> wide(30), y(30);
  for (int i = 0; i < 30; ++i) {
    wide[i] = i;  // 30 distinct integers > default cap of 20
    y[i] = i % 2;
  }
  Dataset d = make_dataset({num_col("w", wide)}, y, TaskKind::binary_classification);
  auto [out, spec] = fit_apply(d, TransformId::freq);
  CHECK(spec.noop);
  CHECK(out.find("w~freq") == nullptr);
}

TEST_CASE("elementwise transforms compute the expected values") {
  Dataset d = cls4({num_col("x", {-1.5, 0.0, 0.5, 8.0})});

  auto rounded = fit_apply(d, TransformId::round).out;
  CHECK(rounded.find("x~round")->numeric == std::vector<double>{-2, 0, 1, 8});

  auto t = fit_apply(d, TransformId::tanh).out;
  CHECK(t.find("x~tanh")->numeric[0] == doctest::Approx(std::tanh(-1.5)).epsilon(1e-15));

  auto c = fit_apply(d, TransformId::cbrt).out;
  CHECK(c.find("x~cbrt")->numeric[3] == doctest::Approx(2.0).epsilon(1e-15));

  auto s = fit_apply(d, TransformId::sigmoid).out;
  CHECK(s.find("x~sigmoid")->numeric[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.find("x~sigmoid")->numeric[3] == doctest::Approx(1.0 / (1.0 + std::exp(-8.0))));
}

TEST_CASE("minmax scaling and degenerate skip") {
  Dataset d = cls4({num_col("x", {0, 5, 10, 10}), num_col("flat", {7, 7, 7, 7})});
  auto [out, spec] = fit_apply(d, TransformId::minmaxscaler);
  CHECK_FALSE(spec.noop);
  CHECK(out.find("x~minmaxscaler")->numeric == std::vector<double>{0, 0.5, 1, 1});
  CHECK(out.find("flat~minmaxscaler") == nullptr);

  // out-of-range replay values extrapolate with the fitted range
  Dataset fresh = cls4({num_col("x", {20, 0, 0, 0}), num_col("flat", {7, 7, 7, 7})});
  CHECK(replay(spec, fresh).find("x~minmaxscaler")->numeric[0] == doctest::Approx(2.0));

  Dataset allflat = cls4({num_col("flat", {7, 7, 7, 7})});
  CHECK(fit_apply(allflat, TransformId::minmaxscaler).spec.noop);
}

TEST_CASE("stdscaler standardizes with population sigma") {
  Dataset d = make_dataset({num_col("x", {1, 2, 3})}, {1, 2, 3}, TaskKind::regression);
  auto [out, spec] = fit_apply(d, TransformId::stdscaler);
  double sigma = std::sqrt(2.0 / 3.0);
  const auto& v = out.find("x~stdscaler")->numeric;
  CHECK(v[0] == doctest::Approx(-1.0 / sigma).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.0));
  CHECK(v[2] == doctest::Approx(1.0 / sigma).epsilon(1e-12));
}

TEST_CASE("groupby stddev uses the sample convention") {
  Dataset d = cls4({cat_col("key", {"a", "a", "b", "b"}), num_col("val", {1, 3, 5, 5})});
  auto [out, spec] = fit_apply(d, TransformId::groupby_stddev);
  REQUIRE_FALSE(spec.noop);
  const auto* col = out.find("val@key~groupby_stddev");
  REQUIRE(col != nullptr);
  // sample stddev of {1,3} is sqrt(2); the degenerate group {5,5} gives 0
  CHECK(col->numeric[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(col->numeric[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(col->numeric[2] == 0.0);
  CHECK(col->numeric[3] == 0.0);

  // single-member groups emit zero, unseen keys emit zero
  Dataset fresh = cls4({cat_col("key", {"a", "zz", "b", "a"}), num_col("val", {0, 0, 0, 0})});
  Dataset replayed = replay(spec, fresh);
  CHECK(replayed.find("val@key~groupby_stddev")->numeric ==
        std::vector<double>{std::sqrt(2.0), 0.0, 0.0, std::sqrt(2.0)});
}

TEST_CASE("groupby candidate ranking prefers keys that explain variance") {
  // key1 splits val cleanly (high between-group variance), key2 does not
  Dataset d = make_dataset(
      {cat_col("key1", {"a", "a", "b", "b", "a", "b"}),
       cat_col("key2", {"p", "q", "p", "q", "q", "p"}),
       num_col("val", {0, 0, 10, 10, 0, 10})},
      {0, 1, 0, 1, 0, 1}, TaskKind::binary_classification);
  TransformConfig cfg;
  cfg.groupby_pair_cap = 1;
  auto [out, spec] = fit_apply(d, TransformId::groupby_stddev, cfg);
  CHECK(out.find("val@key1~groupby_stddev") != nullptr);
  CHECK(out.find("val@key2~groupby_stddev") == nullptr);
}

TEST_CASE("groupby cardinality bounds") {
  // a key with one group and a key where every row is its own group are both ineligible
  Dataset d = make_dataset(
      {cat_col("all_same", {"u", "u", "u", "u", "u", "u", "u", "u"}),
       cat_col("all_diff", {"a", "b", "c", "d", "e", "f", "g", "h"}),
       num_col("val", {1, 2, 3, 4, 5, 6, 7, 8})},
      {0, 1, 0, 1, 0, 1, 0, 1}, TaskKind::binary_classification);
  CHECK(fit_apply(d, TransformId::groupby_stddev).spec.noop);
}

TEST_CASE("pca recovers the shared direction of correlated columns") {
  Dataset d = make_dataset({num_col("x", {1, 2, 3}), num_col("y", {2, 4, 6})}, {1, 2, 3},
                           TaskKind::regression);
  auto [out, spec] = fit_apply(d, TransformId::pca);
  REQUIRE_FALSE(spec.noop);
  const auto& params = std::get<PcaParams>(spec.params);
  REQUIRE(params.components.size() == 1);  // second eigenvalue collapses to zero
  CHECK(params.components[0][0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK(params.components[0][1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
  const auto* pc1 = out.find("pc1~pca");
  REQUIRE(pc1 != nullptr);
  CHECK(pc1->numeric[0] == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-9));
  CHECK(pc1->numeric[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pc1->numeric[2] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));

  // deterministic: identical refit, identical canonical text
  auto again = fit_apply(d, TransformId::pca);
  CHECK(again.spec.canonical_text() == spec.canonical_text());
}

TEST_CASE("pca needs two informative numeric columns") {
  Dataset one = make_dataset({num_col("x", {1, 2, 3}), num_col("flat", {5, 5, 5})},
                             {1, 2, 3}, TaskKind::regression);
  CHECK(fit_apply(one, TransformId::pca).spec.noop);
}

TEST_CASE("feature selection keeps the most correlated columns in order") {
  // |corr| with target: strong for "good" and "cat", ~0 for the noise columns
  Dataset d = make_dataset(
      {num_col("noise1", {5, -3, 4, -6, 1, -2, 3, -1}),
       num_col("good", {0, 1, 0, 1, 0, 1, 0, 1}),
       cat_col("cat", {"n", "p", "n", "p", "n", "p", "n", "p"}),
       num_col("noise2", {0.3, 0.1, -0.4, 0.2, -0.1, 0.0, 0.2, -0.3})},
      {0, 1, 0, 1, 0, 1, 0, 1}, TaskKind::binary_classification);
  auto [out, spec] = fit_apply(d, TransformId::feature_selection);
  REQUIRE_FALSE(spec.noop);
  REQUIRE(out.columns.size() == 2);
  CHECK(out.columns[0].name == "good");
  CHECK(out.columns[1].name == "cat");

  TransformConfig keep_all;
  keep_all.selection_keep_fraction = 1.0;
  CHECK(fit_apply(d, TransformId::feature_selection, keep_all).spec.noop);

  TransformConfig keep_min;
  keep_min.selection_keep_fraction = 0.01;  // floors at one column
  CHECK(fit_apply(d, TransformId::feature_selection, keep_min).out.columns.size() == 1);
}

TEST_CASE("fit statistics come only from masked rows") {
  Dataset d = cls4({num_col("x", {0, 5, 10, 100})});
  std::vector<std::uint8_t> mask{1, 1, 1, 0};  // last row held out of the fit
  auto [out, spec] = fit_apply(d, TransformId::minmaxscaler, mask);
  const auto& params = std::get<MinMaxParams>(spec.params);
  CHECK(params.cols[0].min == 0);
  CHECK(params.cols[0].max == 10);
  CHECK(out.find("x~minmaxscaler")->numeric[3] == doctest::Approx(10.0));
}

TEST_CASE("derived names collide-skip so chains stay well formed") {
  Dataset d = cls4({num_col("x", {1, 2, 3, 4})});
  Dataset once = fit_apply(d, TransformId::cbrt).out;
  auto [twice, spec] = fit_apply(once, TransformId::cbrt);
  CHECK_FALSE(spec.noop);
  CHECK(twice.find("x~cbrt~cbrt") != nullptr);
  // only the chained column is new; x~cbrt was not regenerated
  CHECK(twice.columns.size() == once.columns.size() + 1);
  const auto& lineage = twice.find("x~cbrt~cbrt")->lineage;
  CHECK(lineage == std::vector<std::string>{"cbrt", "cbrt"});
}

TEST_CASE("noop fits replay as the identity") {
  Dataset d = make_dataset({cat_col("c", {"a", "b", "a", "b"})}, {0, 1, 0, 1},
                           TaskKind::binary_classification);
  auto [out, spec] = fit_apply(d, TransformId::tanh);
  CHECK(spec.noop);
  CHECK(out.columns.size() == d.columns.size());
  CHECK(replay(spec, d).columns.size() == d.columns.size());
  CHECK(spec.canonical_text() == "id=tanh\nnoop\n");
}

TEST_CASE("replay validates sources") {
  Dataset d = cls4({num_col("x", {1, 2, 3, 4})});
  auto spec = fit_apply(d, TransformId::stdscaler).spec;
  Dataset other = cls4({num_col("zz", {1, 2, 3, 4})});
  CHECK_THROWS(replay(spec, other));
}

TEST_CASE("applicability matches column structure") {
  Dataset nums = cls4({num_col("a", {1, 2, 3, 4}), num_col("b", {4, 3, 2, 1})});
  Dataset cats = make_dataset({cat_col("c", {"a", "b", "a", "b"})}, {0, 1, 0, 1},
                              TaskKind::binary_classification);
  CHECK(applicable(nums, TransformId::pca));
  CHECK_FALSE(applicable(cats, TransformId::pca));
  CHECK(applicable(nums, TransformId::tanh));
  CHECK_FALSE(applicable(cats, TransformId::tanh));
  CHECK(applicable(cats, TransformId::freq));
  CHECK(applicable(nums, TransformId::freq));  // integral numerics count as discrete
  Dataset fractional = cls4({num_col("f", {0.5, 1.25, 2.5, 3.75})});
  CHECK_FALSE(applicable(fractional, TransformId::freq));
  CHECK_FALSE(applicable(nums, TransformId::groupby_stddev));
  CHECK_FALSE(applicable(cats, TransformId::groupby_stddev));
  CHECK(applicable(nums, TransformId::feature_selection));
  CHECK_FALSE(applicable(cats, TransformId::feature_selection));
}

TEST_CASE("canonical text distinguishes different fits") {
  Dataset d1 = cls4({num_col("x", {0, 5, 10, 10})});
  Dataset d2 = cls4({num_col("x", {0, 5, 10, 20})});
  auto s1 = fit_apply(d1, TransformId::minmaxscaler).spec.canonical_text();
  auto s1b = fit_apply(d1, TransformId::minmaxscaler).spec.canonical_text();
  auto s2 = fit_apply(d2, TransformId::minmaxscaler).spec.canonical_text();
  CHECK(s1 == s1b);
  CHECK(s1 != s2);
}
