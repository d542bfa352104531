// Benchmark for the data-parallel kernels: runs each workload through the
// serial reference path and the OpenMP path, checks that the two outputs are
// bit-identical, and reports median wall times. The equality check is the
// point as much as the timing; the serial path is the reference
// implementation the parallel kernels are tested against.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aprl/dataset.hpp"
#include "aprl/ensemble.hpp"
#include "aprl/estimators.hpp"
#include "aprl/matrix.hpp"
#include "aprl/parallel.hpp"
#include "aprl/rng.hpp"

using namespace aprl;

namespace {

struct Workload {
  std::string name;
  // Runs the kernel once and returns its output for the equality check.
  std::function<std::vector<double>(Exec)> run;
};

double median_ms(const std::function<void()>& body, int reps) {
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    auto start = std::chrono::steady_clock::now();
    body();
    auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

Matrix synth_features(std::size_t n, std::size_t p, Rng rng) {
  Matrix x(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal();
  return x;
}

std::vector<double> synth_labels(const Matrix& x, Rng rng) {
  std::vector<double> y(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double score = 1.3 * x(i, 0) - 0.8 * x(i, 1) + 0.4 * x(i, 2) + 0.3 * rng.normal();
    y[i] = score > 0.0 ? 1.0 : 0.0;
  }
  return y;
}

Dataset matrix_dataset(const Matrix& x, std::vector<double> y) {
  Dataset d;
  d.name = "bench";
  d.n_rows = x.rows();
  d.target.task = TaskKind::binary_classification;
  d.target.values = std::move(y);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    FeatureColumn c;
    c.name = "f" + std::to_string(j);
    c.kind = ColumnKind::numeric;
    c.numeric.resize(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) c.numeric[i] = x(i, j);
    c.missing.assign(x.rows(), 0);
    d.columns.push_back(std::move(c));
  }
  d.validate();
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aprl-bench: serial reference vs OpenMP kernels"};
  int reps = 3;
  double scale = 1.0;
  std::uint64_t seed = 1;
  app.add_option("--reps", reps, "Repetitions per measurement (median reported)")
      ->check(CLI::PositiveNumber);
  app.add_option("--scale", scale, "Problem size multiplier")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Random seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  auto n = [scale](std::size_t base) {
    return static_cast<std::size_t>(static_cast<double>(base) * scale);
  };

  Rng rng(seed);
  std::printf("openmp %s, max threads %d\n", openmp_enabled() ? "on" : "off",
              max_threads());
  std::printf("%-28s %12s %12s %9s  %s\n", "workload", "serial(ms)", "parallel(ms)",
              "speedup", "outputs");

  std::vector<Workload> workloads;

  {
    Matrix x = synth_features(n(600), 12, rng.split("forest-x"));
    std::vector<double> y = synth_labels(x, rng.split("forest-y"));
    Rng fit_rng = rng.split("forest-fit");
    workloads.push_back({"random_forest fit+predict", [x, y, fit_rng](Exec exec) {
                           auto model = fit(EstimatorId::random_forest,
                                            default_params(EstimatorId::random_forest),
                                            x, y, fit_rng, exec);
                           return model->predict(x);
                         }});
  }

  {
    Matrix x = synth_features(n(500), 10, rng.split("gbt-x"));
    std::vector<double> y = synth_labels(x, rng.split("gbt-y"));
    Dataset d = matrix_dataset(x, y);
    FoldPlan folds = make_folds(d, 5, 77);
    Rng cv_rng = rng.split("gbt-cv");
    auto shared = std::make_shared<Dataset>(std::move(d));
    workloads.push_back(
        {"gradient_boosted_trees cv", [shared, folds, cv_rng](Exec exec) {
           return cv_predict(EstimatorId::gradient_boosted_trees,
                             default_params(EstimatorId::gradient_boosted_trees),
                             *shared, folds, cv_rng, exec)
               .values;
         }});
  }

  {
    Matrix x = synth_features(n(2000), 8, rng.split("knn-x"));
    std::vector<double> y = synth_labels(x, rng.split("knn-y"));
    Rng fit_rng = rng.split("knn-fit");
    workloads.push_back({"knn predict", [x, y, fit_rng](Exec exec) {
                           auto model = fit(EstimatorId::knn,
                                            default_params(EstimatorId::knn), x, y,
                                            fit_rng, exec);
                           return model->predict(x);
                         }});
  }

  {
    std::size_t rows = n(3000);
    Rng gen = rng.split("greedy");
    std::vector<double> y(rows);
    for (double& v : y) v = gen.uniform();
    std::vector<PredictionVector> candidates;
    for (int c = 0; c < 40; ++c) {
      PredictionVector pv;
      pv.node_id = c;
      pv.values.resize(rows);
      Rng noise = gen.split("noise", static_cast<std::uint64_t>(c));
      for (std::size_t i = 0; i < rows; ++i) pv.values[i] = y[i] + 0.3 * noise.normal();
      candidates.push_back(std::move(pv));
    }
    workloads.push_back({"greedy ensemble selection", [candidates, y](Exec exec) {
                           SelectOptions opt;
                           opt.exec = exec;
                           auto result = greedy_select(candidates, y, opt);
                           std::vector<double> out{result.value.e, result.value.e_bar,
                                                   result.value.a_bar};
                           for (int id : result.members)
                             out.push_back(static_cast<double>(id));
                           return out;
                         }});
  }

  bool all_identical = true;
  for (const Workload& w : workloads) {
    std::vector<double> serial_out = w.run(Exec::serial);
    std::vector<double> parallel_out = w.run(Exec::parallel);
    bool identical = serial_out == parallel_out;
    all_identical &= identical;

    double serial_ms = median_ms([&w] { w.run(Exec::serial); }, reps);
    double parallel_ms = median_ms([&w] { w.run(Exec::parallel); }, reps);
    std::printf("%-28s %12.2f %12.2f %8.2fx  %s\n", w.name.c_str(), serial_ms,
                parallel_ms, serial_ms / parallel_ms,
                identical ? "identical" : "DIFFER");
  }

  if (!all_identical) {
    std::printf("FAIL: parallel outputs diverged from the serial reference\n");
    return 1;
  }
  return 0;
}
