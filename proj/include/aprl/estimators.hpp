#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aprl/dataset.hpp"
#include "aprl/matrix.hpp"
#include "aprl/parallel.hpp"
#include "aprl/rng.hpp"

namespace aprl {

enum class EstimatorId {
  random_forest,
  gradient_boosted_trees,
  logistic_regression,
  knn,
  random_forest_reg,
  ridge_regression,
  knn_reg
};

const std::vector<EstimatorId>& estimators_for(TaskKind task);
std::string_view estimator_name(EstimatorId id);
std::optional<EstimatorId> estimator_from_name(std::string_view name);
TaskKind estimator_task(EstimatorId id);

// A hyper-parameter value: a number or a named option.
struct HpValue {
  enum class Kind { number, category };
  Kind kind = Kind::number;
  double number = 0;
  std::string category;

  HpValue() = default;
  HpValue(double v) : kind(Kind::number), number(v) {}
  HpValue(int v) : kind(Kind::number), number(v) {}
  HpValue(const char* s) : kind(Kind::category), category(s) {}
  HpValue(std::string s) : kind(Kind::category), category(std::move(s)) {}

  friend bool operator==(const HpValue& a, const HpValue& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::number ? a.number == b.number : a.category == b.category;
  }
};

using HyperParams = std::map<std::string, HpValue>;

// Declared search space of one hyper-parameter.
struct ParamSpec {
  enum class Kind { integer, real, log_real, categorical };
  std::string name;
  Kind kind = Kind::real;
  double lo = 0, hi = 0;              // numeric bounds (inclusive)
  std::vector<std::string> options;   // categorical choices
  HpValue default_value;
};

const std::vector<ParamSpec>& param_space(EstimatorId id);
HyperParams default_params(EstimatorId id);
// Throws std::invalid_argument when a value falls outside its declared space
// or a parameter is missing/unknown.
void validate_params(EstimatorId id, const HyperParams& hp);
// "k=5 weighting=uniform" -- deterministic text form used in reports/logs.
std::string params_text(const HyperParams& hp);

// Out-of-fold predictions for one fitted configuration; the raw material of
// ensemble selection.
struct PredictionVector {
  int node_id = -1;
  std::vector<double> values;
  double cv_error = 0;  // mean squared error of values vs target
  EstimatorId estimator = EstimatorId::random_forest;
  HyperParams hyperparams;
};

class Model {
 public:
  virtual ~Model() = default;
  virtual std::vector<double> predict(const Matrix& X) const = 0;
};

// Maps typed feature columns onto a numeric block: numerics pass through,
// categorical columns one-hot when the vocabulary is small and fall back to
// frequency-rank codes when it is not. Fit once per dataset, then applied to
// any dataset carrying the same columns (unseen categories encode to zeros /
// one-past-the-last rank).
class Encoder {
 public:
  static constexpr std::size_t kOneHotCap = 12;

  static Encoder fit(const Dataset& d);
  Matrix apply(const Dataset& d) const;
  std::size_t out_cols() const { return out_cols_; }

 private:
  struct ColPlan {
    std::string name;
    bool categorical = false;
    bool one_hot = false;
    std::vector<std::string> categories;          // one-hot slots, fixed order
    std::map<std::string, double> ordinal_codes;  // frequency-rank fallback
  };
  std::vector<ColPlan> plans_;
  std::size_t out_cols_ = 0;
};

// Deterministic given (inputs, rng); exec only distributes work.
// Throws on an empty feature block or a single-class classification target.
std::unique_ptr<Model> fit(EstimatorId id, const HyperParams& hp, const Matrix& X,
                           const std::vector<double>& y, Rng rng,
                           Exec exec = Exec::serial);

// Out-of-fold prediction: for each fold, fits on the complement and predicts
// the fold's rows, so every row is predicted exactly once by a model that
// never saw it. cv_error = (1/n) sum (y_i - v_i)^2.
PredictionVector cv_predict(EstimatorId id, const HyperParams& hp, const Dataset& d,
                            const FoldPlan& folds, Rng rng, Exec exec = Exec::serial);

}  // namespace aprl
