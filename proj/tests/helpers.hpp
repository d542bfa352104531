#pragma once

// Shared builders for the test suites: in-memory datasets, temp files,
// synthetic learning problems with known structure.

#include <array>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "aprl/dataset.hpp"
#include "aprl/rng.hpp"

namespace test_helpers {

inline aprl::FeatureColumn num_col(std::string name, std::vector<double> values) {
  aprl::FeatureColumn c;
  c.name = std::move(name);
  c.kind = aprl::ColumnKind::numeric;
  c.missing.assign(values.size(), 0);
  c.numeric = std::move(values);
  return c;
}

inline aprl::FeatureColumn cat_col(std::string name, std::vector<std::string> labels) {
  aprl::FeatureColumn c;
  c.name = std::move(name);
  c.kind = aprl::ColumnKind::categorical;
  c.missing.assign(labels.size(), 0);
  c.labels = std::move(labels);
  return c;
}

inline aprl::Dataset make_dataset(std::vector<aprl::FeatureColumn> columns,
                                  std::vector<double> target, aprl::TaskKind task,
                                  std::string name = "test") {
  aprl::Dataset d;
  d.name = std::move(name);
  d.n_rows = target.size();
  d.columns = std::move(columns);
  d.target.task = task;
  d.target.values = std::move(target);
  d.validate();
  return d;
}

// Writes text to a unique temp path and returns it; files are tiny and the
// test process is sandboxed, so no cleanup pass is needed.
inline std::string write_temp(const std::string& stem, const std::string& text) {
  static int counter = 0;
  std::string path = "/tmp/aprl_test_" + stem + "_" + std::to_string(counter++) + ".csv";
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

// Binary-classification problem where a single numeric column separates the
// classes perfectly.
inline aprl::Dataset separable_classification(std::size_t n, std::uint64_t seed) {
  aprl::Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform() * 2.0 - 1.0;
    y[i] = x[i] > 0 ? 1.0 : 0.0;
  }
  return make_dataset({num_col("x", std::move(x))}, std::move(y),
                      aprl::TaskKind::binary_classification, "separable");
}

// Noisy linear regression target over two informative columns.
inline aprl::Dataset linear_regression_data(std::size_t n, std::uint64_t seed,
                                            double noise = 0.1) {
  aprl::Rng rng(seed);
  std::vector<double> a(n), b(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    y[i] = 2.0 * a[i] - 1.0 * b[i] + noise * rng.normal();
  }
  return make_dataset({num_col("a", std::move(a)), num_col("b", std::move(b))},
                      std::move(y), aprl::TaskKind::regression, "linreg");
}

// Two informative numerics plus a categorical with its own signal, so every
// transform in the catalog is applicable and models have something to learn.
inline aprl::Dataset mixed_classification(std::size_t n, std::uint64_t seed) {
  aprl::Rng rng(seed);
  const std::array<std::string, 3> levels{"red", "green", "blue"};
  std::vector<double> a(n), b(n), y(n);
  std::vector<std::string> color(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    std::size_t lvl = rng.below(3);
    color[i] = levels[lvl];
    double score = 1.4 * a[i] - 0.9 * b[i] + (lvl == 2 ? 1.0 : -0.3);
    y[i] = score > 0.0 ? 1.0 : 0.0;
  }
  return make_dataset({num_col("a", std::move(a)), num_col("b", std::move(b)),
                       cat_col("color", std::move(color))},
                      std::move(y), aprl::TaskKind::binary_classification, "mixed");
}

}  // namespace test_helpers
