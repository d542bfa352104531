#include "aprl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aprl/csv.hpp"
#include "aprl/transforms.hpp"

namespace aprl {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---- shared standardization ------------------------------------------

struct Standardizer {
  std::vector<double> mean, sigma;  // sigma == 0 zeroes the coordinate

  static Standardizer fit(const Matrix& X) {
    Standardizer s;
    std::size_t n = X.rows(), p = X.cols();
    s.mean.assign(p, 0.0);
    s.sigma.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) s.mean[j] += X(i, j);
    for (std::size_t j = 0; j < p; ++j) s.mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        double d = X(i, j) - s.mean[j];
        s.sigma[j] += d * d;
      }
    for (std::size_t j = 0; j < p; ++j)
      s.sigma[j] = std::sqrt(s.sigma[j] / static_cast<double>(n));
    return s;
  }

  Matrix apply(const Matrix& X) const {
    Matrix Z(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.rows(); ++i)
      for (std::size_t j = 0; j < X.cols(); ++j)
        Z(i, j) = sigma[j] == 0.0 ? 0.0 : (X(i, j) - mean[j]) / sigma[j];
    return Z;
  }
};

// ---- decision tree -----------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1, right = -1;
  double value = 0;
};

struct TreeOptions {
  int max_depth = 6;
  int min_leaf = 1;
  int feature_sample = 0;  // number of features tried per split; 0 = all
  double leaf_clamp = 0;   // > 0 clamps leaf values to +/- this
};

// One CART-style tree. The split criterion maximizes sum over children of
// (sum of split_y)^2 / count, which is the variance criterion and, for 0/1
// labels, picks the same splits as Gini impurity. Leaf values are
// sum(leaf_num) / sum(leaf_den) over the leaf's rows; pass den = nullptr for
// plain means. Ties go to the lowest feature index, then lowest threshold,
// by visiting candidates in that order and only accepting strict gains.
class Tree {
 public:
  static Tree fit(const Matrix& X, const std::vector<double>& split_y,
                  const std::vector<double>* leaf_num, const std::vector<double>* leaf_den,
                  std::vector<std::size_t> rows, const TreeOptions& opt, Rng& rng) {
    Tree t;
    Builder b{X, split_y, leaf_num, leaf_den, opt, rng, t.nodes_};
    b.build(std::move(rows), 0);
    return t;
  }

  double predict_row(const double* x) const {
    int i = 0;
    while (nodes_[i].feature >= 0)
      i = x[static_cast<std::size_t>(nodes_[i].feature)] <= nodes_[i].threshold
              ? nodes_[i].left
              : nodes_[i].right;
    return nodes_[i].value;
  }

 private:
  struct Builder {
    const Matrix& X;
    const std::vector<double>& split_y;
    const std::vector<double>* leaf_num;
    const std::vector<double>* leaf_den;
    const TreeOptions& opt;
    Rng& rng;
    std::vector<TreeNode>& nodes;

    double leaf_value(const std::vector<std::size_t>& rows) const {
      double num = 0, den = 0;
      for (std::size_t r : rows) {
        num += leaf_num ? (*leaf_num)[r] : split_y[r];
        den += leaf_den ? (*leaf_den)[r] : 1.0;
      }
      double v = num / std::max(den, 1e-12);
      if (opt.leaf_clamp > 0) v = std::clamp(v, -opt.leaf_clamp, opt.leaf_clamp);
      return v;
    }

    int build(std::vector<std::size_t> rows, int depth) {
      std::size_t n = rows.size();
      double total = 0;
      for (std::size_t r : rows) total += split_y[r];

      bool force_leaf = depth >= opt.max_depth ||
                        n < 2 * static_cast<std::size_t>(opt.min_leaf);
      if (!force_leaf) {
        bool constant = true;
        for (std::size_t r : rows)
          if (split_y[r] != split_y[rows[0]]) {
            constant = false;
            break;
          }
        force_leaf = constant;
      }

      int best_feature = -1;
      double best_threshold = 0;
      if (!force_leaf) {
        std::size_t p = X.cols();
        std::vector<std::size_t> features;
        if (opt.feature_sample > 0 && static_cast<std::size_t>(opt.feature_sample) < p) {
          std::vector<std::size_t> all(p);
          for (std::size_t j = 0; j < p; ++j) all[j] = j;
          for (int j = 0; j < opt.feature_sample; ++j) {
            std::size_t pick = static_cast<std::size_t>(j) + rng.below(p - static_cast<std::size_t>(j));
            std::swap(all[static_cast<std::size_t>(j)], all[pick]);
          }
          features.assign(all.begin(), all.begin() + opt.feature_sample);
          std::sort(features.begin(), features.end());
        } else {
          features.resize(p);
          for (std::size_t j = 0; j < p; ++j) features[j] = j;
        }

        double parent_term = total * total / static_cast<double>(n);
        double best_gain = parent_term;
        std::vector<std::pair<double, double>> vals(n);  // (feature value, split_y)
        for (std::size_t f : features) {
          for (std::size_t i = 0; i < n; ++i)
            vals[i] = {X(rows[i], f), split_y[rows[i]]};
          std::sort(vals.begin(), vals.end());
          double cum = 0;
          for (std::size_t i = 0; i + 1 < n; ++i) {
            cum += vals[i].second;
            if (vals[i].first == vals[i + 1].first) continue;
            std::size_t nl = i + 1, nr = n - nl;
            if (nl < static_cast<std::size_t>(opt.min_leaf) ||
                nr < static_cast<std::size_t>(opt.min_leaf))
              continue;
            double rest = total - cum;
            double gain = cum * cum / static_cast<double>(nl) +
                          rest * rest / static_cast<double>(nr);
            if (gain > best_gain) {
              best_gain = gain;
              best_feature = static_cast<int>(f);
              best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
            }
          }
        }
      }

      if (best_feature < 0) {
        nodes.push_back({-1, 0, -1, -1, leaf_value(rows)});
        return static_cast<int>(nodes.size()) - 1;
      }

      std::vector<std::size_t> left_rows, right_rows;
      left_rows.reserve(n);
      right_rows.reserve(n);
      for (std::size_t r : rows)
        (X(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows
                                                                        : right_rows)
            .push_back(r);
      rows.clear();
      rows.shrink_to_fit();

      int self = static_cast<int>(nodes.size());
      nodes.push_back({best_feature, best_threshold, -1, -1, 0});
      int left = build(std::move(left_rows), depth + 1);
      int right = build(std::move(right_rows), depth + 1);
      nodes[static_cast<std::size_t>(self)].left = left;
      nodes[static_cast<std::size_t>(self)].right = right;
      return self;
    }
  };

  std::vector<TreeNode> nodes_;
};

// ---- hyper-parameter plumbing ------------------------------------------

int hp_int(const HyperParams& hp, const std::string& name) {
  return static_cast<int>(std::llround(hp.at(name).number));
}

double hp_num(const HyperParams& hp, const std::string& name) { return hp.at(name).number; }

const std::string& hp_cat(const HyperParams& hp, const std::string& name) {
  return hp.at(name).category;
}

// ---- models --------------------------------------------------------------

class ForestModel : public Model {
 public:
  ForestModel(std::vector<Tree> trees) : trees_(std::move(trees)) {}

  std::vector<double> predict(const Matrix& X) const override {
    std::vector<double> out(X.rows(), 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double acc = 0;
      for (const auto& t : trees_) acc += t.predict_row(X.row(i));
      out[i] = acc / static_cast<double>(trees_.size());
    }
    return out;
  }

 private:
  std::vector<Tree> trees_;
};

std::unique_ptr<Model> fit_forest(const HyperParams& hp, const Matrix& X,
                                  const std::vector<double>& y, Rng rng, Exec exec) {
  int n_trees = hp_int(hp, "n_trees");
  TreeOptions opt;
  opt.max_depth = hp_int(hp, "max_depth");
  opt.min_leaf = hp_int(hp, "min_leaf");
  const std::string& mode = hp_cat(hp, "feature_subsample");
  auto p = static_cast<double>(X.cols());
  if (mode == "sqrt")
    opt.feature_sample = static_cast<int>(std::ceil(std::sqrt(p)));
  else if (mode == "half")
    opt.feature_sample = static_cast<int>(std::ceil(p / 2.0));
  else
    opt.feature_sample = 0;  // all

  std::size_t n = X.rows();
  std::vector<Tree> trees(static_cast<std::size_t>(n_trees));
  parallel_for(exec, trees.size(), [&](std::size_t t) {
    Rng tree_rng = rng.split("tree", t);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::size_t>(tree_rng.below(n));
    trees[t] = Tree::fit(X, y, nullptr, nullptr, std::move(rows), opt, tree_rng);
  });
  return std::make_unique<ForestModel>(std::move(trees));
}

class GbtModel : public Model {
 public:
  GbtModel(double f0, double lr, std::vector<Tree> trees)
      : f0_(f0), lr_(lr), trees_(std::move(trees)) {}

  std::vector<double> predict(const Matrix& X) const override {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
      double f = f0_;
      for (const auto& t : trees_) f += lr_ * t.predict_row(X.row(i));
      out[i] = sigmoid(f);
    }
    return out;
  }

 private:
  double f0_, lr_;
  std::vector<Tree> trees_;
};

std::unique_ptr<Model> fit_gbt(const HyperParams& hp, const Matrix& X,
                               const std::vector<double>& y, Rng rng) {
  int rounds = hp_int(hp, "n_rounds");
  double lr = hp_num(hp, "learning_rate");
  TreeOptions opt;
  opt.max_depth = hp_int(hp, "max_depth");
  opt.min_leaf = 1;
  opt.leaf_clamp = 10.0;

  std::size_t n = X.rows();
  double base = 0;
  for (double v : y) base += v;
  base = std::clamp(base / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
  double f0 = std::log(base / (1.0 - base));

  std::vector<double> F(n, f0), resid(n), hess(n);
  std::vector<std::size_t> all_rows(n);
  for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;

  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(rounds));
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      double pi = sigmoid(F[i]);
      resid[i] = y[i] - pi;
      hess[i] = pi * (1.0 - pi);
    }
    Rng round_rng = rng.split("round", static_cast<std::uint64_t>(r));
    Tree t = Tree::fit(X, resid, &resid, &hess, all_rows, opt, round_rng);
    for (std::size_t i = 0; i < n; ++i) F[i] += lr * t.predict_row(X.row(i));
    trees.push_back(std::move(t));
  }
  return std::make_unique<GbtModel>(f0, lr, std::move(trees));
}

class LogisticModel : public Model {
 public:
  LogisticModel(Standardizer st, std::vector<double> w, double b)
      : st_(std::move(st)), w_(std::move(w)), b_(b) {}

  std::vector<double> predict(const Matrix& X) const override {
    Matrix Z = st_.apply(X);
    std::vector<double> out(Z.rows());
    for (std::size_t i = 0; i < Z.rows(); ++i) {
      double z = b_;
      for (std::size_t j = 0; j < Z.cols(); ++j) z += w_[j] * Z(i, j);
      out[i] = sigmoid(z);
    }
    return out;
  }

 private:
  Standardizer st_;
  std::vector<double> w_;
  double b_;
};

std::unique_ptr<Model> fit_logistic(const HyperParams& hp, const Matrix& X,
                                    const std::vector<double>& y) {
  double l2 = hp_num(hp, "l2");
  int epochs = hp_int(hp, "epochs");
  constexpr double kStep = 0.1;

  Standardizer st = Standardizer::fit(X);
  Matrix Z = st.apply(X);
  std::size_t n = Z.rows(), p = Z.cols();
  std::vector<double> w(p, 0.0), gw(p);
  double b = 0.0;

  for (int e = 0; e < epochs; ++e) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = b;
      for (std::size_t j = 0; j < p; ++j) z += w[j] * Z(i, j);
      double err = sigmoid(z) - y[i];
      for (std::size_t j = 0; j < p; ++j) gw[j] += err * Z(i, j);
      gb += err;
    }
    for (std::size_t j = 0; j < p; ++j)
      w[j] -= kStep * (gw[j] / static_cast<double>(n) + l2 * w[j]);
    b -= kStep * gb / static_cast<double>(n);
  }
  return std::make_unique<LogisticModel>(std::move(st), std::move(w), b);
}

class KnnModel : public Model {
 public:
  KnnModel(Standardizer st, Matrix Z, std::vector<double> y, std::size_t k, bool inverse,
           Exec exec)
      : st_(std::move(st)), train_(std::move(Z)), y_(std::move(y)), k_(k),
        inverse_(inverse), exec_(exec) {}

  std::vector<double> predict(const Matrix& X) const override {
    Matrix Q = st_.apply(X);
    std::vector<double> out(Q.rows());
    parallel_for(exec_, Q.rows(), [&](std::size_t i) { out[i] = predict_row(Q, i); });
    return out;
  }

 private:
  double predict_row(const Matrix& Q, std::size_t qi) const {
    std::size_t n = train_.rows(), p = train_.cols();
    std::vector<std::pair<double, std::size_t>> dist(n);
    const double* q = Q.row(qi);
    for (std::size_t i = 0; i < n; ++i) {
      const double* t = train_.row(i);
      double d2 = 0;
      for (std::size_t j = 0; j < p; ++j) {
        double d = q[j] - t[j];
        d2 += d * d;
      }
      dist[i] = {d2, i};
    }
    std::size_t k = std::min(k_, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
    if (!inverse_) {
      double acc = 0;
      for (std::size_t r = 0; r < k; ++r) acc += y_[dist[r].second];
      return acc / static_cast<double>(k);
    }
    double num = 0, den = 0;
    for (std::size_t r = 0; r < k; ++r) {
      double w = 1.0 / (std::sqrt(dist[r].first) + 1e-12);
      num += w * y_[dist[r].second];
      den += w;
    }
    return num / den;
  }

  Standardizer st_;
  Matrix train_;
  std::vector<double> y_;
  std::size_t k_;
  bool inverse_;
  Exec exec_;
};

std::unique_ptr<Model> fit_knn(const HyperParams& hp, const Matrix& X,
                               const std::vector<double>& y, Exec exec) {
  Standardizer st = Standardizer::fit(X);
  Matrix Z = st.apply(X);
  auto k = static_cast<std::size_t>(hp_int(hp, "k"));
  bool inverse = hp_cat(hp, "weighting") == "inverse_distance";
  return std::make_unique<KnnModel>(std::move(st), std::move(Z), y, k, inverse, exec);
}

// Solves A x = b for symmetric positive definite A (in place, row major).
bool cholesky_solve(std::vector<double>& A, std::vector<double>& b, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double d = A[j * p + j];
    for (std::size_t k2 = 0; k2 < j; ++k2) d -= A[j * p + k2] * A[j * p + k2];
    if (d <= 0) return false;
    double l = std::sqrt(d);
    A[j * p + j] = l;
    for (std::size_t i = j + 1; i < p; ++i) {
      double v = A[i * p + j];
      for (std::size_t k2 = 0; k2 < j; ++k2) v -= A[i * p + k2] * A[j * p + k2];
      A[i * p + j] = v / l;
    }
  }
  for (std::size_t i = 0; i < p; ++i) {  // L z = b
    double v = b[i];
    for (std::size_t k2 = 0; k2 < i; ++k2) v -= A[i * p + k2] * b[k2];
    b[i] = v / A[i * p + i];
  }
  for (std::size_t ii = p; ii-- > 0;) {  // L^T x = z
    double v = b[ii];
    for (std::size_t k2 = ii + 1; k2 < p; ++k2) v -= A[k2 * p + ii] * b[k2];
    b[ii] = v / A[ii * p + ii];
  }
  return true;
}

class RidgeModel : public Model {
 public:
  RidgeModel(Standardizer st, std::vector<double> w, double intercept)
      : st_(std::move(st)), w_(std::move(w)), intercept_(intercept) {}

  std::vector<double> predict(const Matrix& X) const override {
    Matrix Z = st_.apply(X);
    std::vector<double> out(Z.rows());
    for (std::size_t i = 0; i < Z.rows(); ++i) {
      double v = intercept_;
      for (std::size_t j = 0; j < Z.cols(); ++j) v += w_[j] * Z(i, j);
      out[i] = v;
    }
    return out;
  }

 private:
  Standardizer st_;
  std::vector<double> w_;
  double intercept_;
};

std::unique_ptr<Model> fit_ridge(const HyperParams& hp, const Matrix& X,
                                 const std::vector<double>& y) {
  double l2 = hp_num(hp, "l2");
  Standardizer st = Standardizer::fit(X);
  Matrix Z = st.apply(X);
  std::size_t n = Z.rows(), p = Z.cols();
  double y_mean = 0;
  for (double v : y) y_mean += v;
  y_mean /= static_cast<double>(n);

  std::vector<double> gram(p * p, 0.0), rhs(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = Z.row(i);
    double yc = y[i] - y_mean;
    for (std::size_t a = 0; a < p; ++a) {
      rhs[a] += z[a] * yc;
      for (std::size_t b2 = a; b2 < p; ++b2) gram[a * p + b2] += z[a] * z[b2];
    }
  }
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b2 = 0; b2 < a; ++b2) gram[a * p + b2] = gram[b2 * p + a];

  double jitter = l2;
  for (int attempt = 0; attempt < 6; ++attempt) {
    std::vector<double> A = gram;
    std::vector<double> w = rhs;
    for (std::size_t j = 0; j < p; ++j) A[j * p + j] += jitter;
    if (cholesky_solve(A, w, p))
      return std::make_unique<RidgeModel>(std::move(st), std::move(w), y_mean);
    jitter = jitter == 0 ? 1e-10 : jitter * 100.0;
  }
  throw std::runtime_error("ridge_regression: normal equations not positive definite");
}

}  // namespace

// ---- id tables ------------------------------------------------------------

const std::vector<EstimatorId>& estimators_for(TaskKind task) {
  static const std::vector<EstimatorId> kClassification{
      EstimatorId::random_forest, EstimatorId::gradient_boosted_trees,
      EstimatorId::logistic_regression, EstimatorId::knn};
  static const std::vector<EstimatorId> kRegression{
      EstimatorId::random_forest_reg, EstimatorId::ridge_regression, EstimatorId::knn_reg};
  return task == TaskKind::binary_classification ? kClassification : kRegression;
}

std::string_view estimator_name(EstimatorId id) {
  switch (id) {
    case EstimatorId::random_forest: return "random_forest";
    case EstimatorId::gradient_boosted_trees: return "gradient_boosted_trees";
    case EstimatorId::logistic_regression: return "logistic_regression";
    case EstimatorId::knn: return "knn";
    case EstimatorId::random_forest_reg: return "random_forest_reg";
    case EstimatorId::ridge_regression: return "ridge_regression";
    case EstimatorId::knn_reg: return "knn_reg";
  }
  return "";
}

std::optional<EstimatorId> estimator_from_name(std::string_view name) {
  for (TaskKind task : {TaskKind::binary_classification, TaskKind::regression})
    for (EstimatorId id : estimators_for(task))
      if (estimator_name(id) == name) return id;
  return std::nullopt;
}

TaskKind estimator_task(EstimatorId id) {
  switch (id) {
    case EstimatorId::random_forest:
    case EstimatorId::gradient_boosted_trees:
    case EstimatorId::logistic_regression:
    case EstimatorId::knn: return TaskKind::binary_classification;
    default: return TaskKind::regression;
  }
}

const std::vector<ParamSpec>& param_space(EstimatorId id) {
  using K = ParamSpec::Kind;
  static const std::vector<ParamSpec> kForest{
      {"n_trees", K::integer, 10, 300, {}, HpValue(100)},
      {"max_depth", K::integer, 2, 20, {}, HpValue(12)},
      {"min_leaf", K::integer, 1, 20, {}, HpValue(2)},
      {"feature_subsample", K::categorical, 0, 0, {"sqrt", "all", "half"}, HpValue("sqrt")}};
  static const std::vector<ParamSpec> kGbt{
      {"n_rounds", K::integer, 10, 300, {}, HpValue(100)},
      {"learning_rate", K::real, 0.01, 0.5, {}, HpValue(0.1)},
      {"max_depth", K::integer, 1, 6, {}, HpValue(3)}};
  static const std::vector<ParamSpec> kLogistic{
      {"l2", K::log_real, 1e-6, 10, {}, HpValue(1e-3)},
      {"epochs", K::integer, 50, 500, {}, HpValue(200)}};
  static const std::vector<ParamSpec> kKnn{
      {"k", K::integer, 1, 50, {}, HpValue(5)},
      {"weighting", K::categorical, 0, 0, {"uniform", "inverse_distance"}, HpValue("uniform")}};
  static const std::vector<ParamSpec> kRidge{{"l2", K::real, 1e-6, 10, {}, HpValue(1e-3)}};

  switch (id) {
    case EstimatorId::random_forest:
    case EstimatorId::random_forest_reg: return kForest;
    case EstimatorId::gradient_boosted_trees: return kGbt;
    case EstimatorId::logistic_regression: return kLogistic;
    case EstimatorId::knn:
    case EstimatorId::knn_reg: return kKnn;
    case EstimatorId::ridge_regression: return kRidge;
  }
  return kForest;
}

HyperParams default_params(EstimatorId id) {
  HyperParams hp;
  for (const auto& spec : param_space(id)) hp[spec.name] = spec.default_value;
  return hp;
}

void validate_params(EstimatorId id, const HyperParams& hp) {
  const auto& space = param_space(id);
  if (hp.size() != space.size())
    throw std::invalid_argument(std::string(estimator_name(id)) +
                                ": wrong number of hyper-parameters");
  for (const auto& spec : space) {
    auto it = hp.find(spec.name);
    if (it == hp.end())
      throw std::invalid_argument(std::string(estimator_name(id)) + ": missing '" +
                                  spec.name + "'");
    const HpValue& v = it->second;
    if (spec.kind == ParamSpec::Kind::categorical) {
      if (v.kind != HpValue::Kind::category ||
          std::find(spec.options.begin(), spec.options.end(), v.category) ==
              spec.options.end())
        throw std::invalid_argument(std::string(estimator_name(id)) + ": bad value for '" +
                                    spec.name + "'");
    } else {
      if (v.kind != HpValue::Kind::number || !(v.number >= spec.lo && v.number <= spec.hi))
        throw std::invalid_argument(std::string(estimator_name(id)) + ": '" + spec.name +
                                    "' out of bounds");
      if (spec.kind == ParamSpec::Kind::integer && std::floor(v.number) != v.number)
        throw std::invalid_argument(std::string(estimator_name(id)) + ": '" + spec.name +
                                    "' must be an integer");
    }
  }
}

std::string params_text(const HyperParams& hp) {
  std::ostringstream out;
  bool first = true;
  for (const auto& [name, v] : hp) {
    if (!first) out << ' ';
    first = false;
    out << name << '=';
    if (v.kind == HpValue::Kind::number)
      out << csv::format_double(v.number);
    else
      out << v.category;
  }
  return out.str();
}

// ---- encoder ---------------------------------------------------------------

Encoder Encoder::fit(const Dataset& d) {
  Encoder enc;
  std::vector<std::size_t> all_rows(d.n_rows);
  for (std::size_t i = 0; i < d.n_rows; ++i) all_rows[i] = i;
  for (const auto& c : d.columns) {
    ColPlan plan;
    plan.name = c.name;
    if (c.kind == ColumnKind::numeric) {
      enc.out_cols_ += 1;
    } else {
      plan.categorical = true;
      std::set<std::string> distinct(c.labels.begin(), c.labels.end());
      if (distinct.size() <= kOneHotCap) {
        plan.one_hot = true;
        // Slot order: frequency-rank order (count desc, label asc).
        auto codes = frequency_rank_codes(c, all_rows);
        plan.categories.resize(codes.size());
        for (const auto& [label, code] : codes)
          plan.categories[static_cast<std::size_t>(code)] = label;
        enc.out_cols_ += plan.categories.size();
      } else {
        plan.ordinal_codes = frequency_rank_codes(c, all_rows);
        enc.out_cols_ += 1;
      }
    }
    enc.plans_.push_back(std::move(plan));
  }
  return enc;
}

Matrix Encoder::apply(const Dataset& d) const {
  Matrix X(d.n_rows, out_cols_);
  std::size_t col = 0;
  for (const auto& plan : plans_) {
    const FeatureColumn* src = d.find(plan.name);
    if (!src) throw std::runtime_error("encoder: missing column '" + plan.name + "'");
    if (!plan.categorical) {
      for (std::size_t i = 0; i < d.n_rows; ++i) X(i, col) = src->numeric[i];
      col += 1;
    } else if (plan.one_hot) {
      std::map<std::string, std::size_t> slot;
      for (std::size_t s = 0; s < plan.categories.size(); ++s) slot[plan.categories[s]] = s;
      for (std::size_t i = 0; i < d.n_rows; ++i) {
        auto it = slot.find(src->labels[i]);
        if (it != slot.end()) X(i, col + it->second) = 1.0;  // unseen stays all-zero
      }
      col += plan.categories.size();
    } else {
      double unseen = static_cast<double>(plan.ordinal_codes.size());
      for (std::size_t i = 0; i < d.n_rows; ++i) {
        auto it = plan.ordinal_codes.find(src->labels[i]);
        X(i, col) = it == plan.ordinal_codes.end() ? unseen : it->second;
      }
      col += 1;
    }
  }
  return X;
}

// ---- fit / cv_predict -------------------------------------------------------

std::unique_ptr<Model> fit(EstimatorId id, const HyperParams& hp, const Matrix& X,
                           const std::vector<double>& y, Rng rng, Exec exec) {
  if (X.rows() == 0 || X.cols() == 0)
    throw std::invalid_argument(std::string(estimator_name(id)) + ": empty feature block");
  if (X.rows() != y.size())
    throw std::invalid_argument(std::string(estimator_name(id)) + ": X/y length mismatch");
  validate_params(id, hp);
  if (estimator_task(id) == TaskKind::binary_classification) {
    std::size_t pos = 0;
    for (double v : y) pos += v == 1.0;
    if (pos == 0 || pos == y.size())
      throw std::runtime_error(std::string(estimator_name(id)) +
                               ": single-class training target");
  }

  switch (id) {
    case EstimatorId::random_forest:
    case EstimatorId::random_forest_reg: return fit_forest(hp, X, y, rng, exec);
    case EstimatorId::gradient_boosted_trees: return fit_gbt(hp, X, y, rng);
    case EstimatorId::logistic_regression: return fit_logistic(hp, X, y);
    case EstimatorId::knn:
    case EstimatorId::knn_reg: return fit_knn(hp, X, y, exec);
    case EstimatorId::ridge_regression: return fit_ridge(hp, X, y);
  }
  throw std::logic_error("unknown estimator");
}

PredictionVector cv_predict(EstimatorId id, const HyperParams& hp, const Dataset& d,
                            const FoldPlan& folds, Rng rng, Exec exec) {
  if (folds.assignment.size() != d.n_rows || folds.k < 2)
    throw std::invalid_argument("cv_predict: fold plan does not match dataset");
  validate_params(id, hp);

  Encoder enc = Encoder::fit(d);
  Matrix X = enc.apply(d);
  const auto& y = d.target.values;

  PredictionVector pv;
  pv.estimator = id;
  pv.hyperparams = hp;
  pv.values.assign(d.n_rows, std::numeric_limits<double>::quiet_NaN());

  parallel_for(exec, static_cast<std::size_t>(folds.k), [&](std::size_t f) {
    auto fold = static_cast<int>(f);
    auto train_idx = folds.rows_not_in(fold);
    auto test_idx = folds.rows_in(fold);
    if (test_idx.empty()) return;
    std::vector<double> y_train;
    y_train.reserve(train_idx.size());
    for (std::size_t i : train_idx) y_train.push_back(y[i]);
    auto model =
        fit(id, hp, X.take_rows(train_idx), y_train, rng.split("fold", f), Exec::serial);
    auto preds = model->predict(X.take_rows(test_idx));
    for (std::size_t t = 0; t < test_idx.size(); ++t) pv.values[test_idx[t]] = preds[t];
  });

  bool classification = estimator_task(id) == TaskKind::binary_classification;
  double err = 0;
  for (std::size_t i = 0; i < d.n_rows; ++i) {
    if (classification) pv.values[i] = std::clamp(pv.values[i], 0.0, 1.0);
    double diff = y[i] - pv.values[i];
    err += diff * diff;
  }
  pv.cv_error = err / static_cast<double>(d.n_rows);
  return pv;
}

}  // namespace aprl
