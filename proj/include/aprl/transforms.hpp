#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "aprl/dataset.hpp"

namespace aprl {

// Feature-construction catalog. Each entry fits parameters on training rows
// and can then be replayed on any dataset with the same source columns, so
// holdout rows never influence fitted statistics.
enum class TransformId {
  freq,              // occurrence count of each category / discrete value
  pca,               // leading principal components of the numeric block
  round,             // round numerics to nearest integer
  minmaxscaler,      // (x - min) / (max - min)
  tanh,              // elementwise tanh
  groupby_stddev,    // per-group stddev of a numeric column keyed by a categorical
  cbrt,              // elementwise cube root
  sigmoid,           // elementwise logistic
  stdscaler,         // (x - mean) / stddev
  feature_selection  // keep the columns most correlated with the target
};

inline constexpr int kTransformCount = 10;

const std::vector<TransformId>& transform_catalog();
std::string_view transform_name(TransformId id);
std::optional<TransformId> transform_from_name(std::string_view name);

struct TransformConfig {
  int pca_k = 4;                        // max components
  int freq_distinct_cap = 20;           // discrete-numeric eligibility bound
  int groupby_pair_cap = 8;             // max (key, value) pairs materialized
  double selection_keep_fraction = 0.5; // fraction of columns kept
};

// Fitted parameter payloads, one flavor per transform family.
struct FreqParams {
  struct Table {
    std::string source;
    std::map<std::string, double> counts;  // canonical cell text -> train count
  };
  std::vector<Table> tables;
};

struct ElementwiseParams {
  std::vector<std::string> sources;
};

struct MinMaxParams {
  struct Col {
    std::string source;
    double min = 0, max = 0;
  };
  std::vector<Col> cols;
};

struct StdParams {
  struct Col {
    std::string source;
    double mean = 0, sigma = 0;
  };
  std::vector<Col> cols;
};

struct PcaParams {
  std::vector<std::string> sources;
  std::vector<double> means, sigmas;            // per source
  std::vector<std::vector<double>> components;  // each length sources.size()
};

struct GroupbyParams {
  struct Pair {
    std::string key, value;
    std::map<std::string, double> stddev;  // group label -> train stddev
  };
  std::vector<Pair> pairs;
};

struct SelectionParams {
  std::vector<std::string> kept;  // original column order
};

struct TransformSpec {
  TransformId id = TransformId::freq;
  bool noop = false;  // fit found nothing to do; replay is the identity
  std::variant<std::monostate, FreqParams, ElementwiseParams, MinMaxParams, StdParams,
               PcaParams, GroupbyParams, SelectionParams>
      params;

  // Stable text dump of id + fitted parameters; equal specs produce equal
  // text, which is how tests compare fits across runs.
  std::string canonical_text() const;
};

// Cheap structural test used when enumerating actions: does this dataset
// have columns the transform could act on at all? A fit may still come back
// noop when every candidate is degenerate.
bool applicable(const Dataset& d, TransformId id);

// Frequency-rank codes for a categorical column over the given rows: the
// most frequent category (ties by label) gets 0. Shared by feature selection
// and the estimator encoder so the two orderings agree.
std::map<std::string, double> frequency_rank_codes(const FeatureColumn& c,
                                                   const std::vector<std::size_t>& rows);

struct FitApplyResult {
  Dataset out;
  TransformSpec spec;
};

// Fits on rows where train_mask is 1 (statistics only see those rows) and
// applies to every row. Derived columns are named <source>~<transform>
// (pc1~pca, value@key~groupby_stddev for the multi-source ones); a candidate
// whose output name already exists is skipped.
FitApplyResult fit_apply(const Dataset& d, TransformId id,
                         const std::vector<std::uint8_t>& train_mask,
                         const TransformConfig& cfg = {});
FitApplyResult fit_apply(const Dataset& d, TransformId id, const TransformConfig& cfg = {});

// Applies previously fitted parameters to a dataset with the same source
// columns; throws if a source is absent or an output name collides.
Dataset replay(const TransformSpec& spec, const Dataset& d);

}  // namespace aprl
