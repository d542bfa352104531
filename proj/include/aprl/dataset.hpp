#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aprl {

enum class TaskKind { binary_classification, regression };

std::string_view task_name(TaskKind t);
std::optional<TaskKind> task_from_name(std::string_view s);

enum class ColumnKind { numeric, categorical, datetime };

std::string_view column_kind_name(ColumnKind k);
std::optional<ColumnKind> column_kind_from_name(std::string_view s);

// Placeholder label given to missing categorical cells.
inline const std::string kMissingLabel = "\xe2\x8a\xa5missing\xe2\x8a\xa5";  // ⊥missing⊥

// One feature column. Datetime sources are expanded to numeric component
// columns at load time, so a materialized column is only ever numeric or
// categorical; `kind` keeps datetime around for declaration purposes.
struct FeatureColumn {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<double> numeric;           // populated when kind == numeric
  std::vector<std::string> labels;       // populated when kind == categorical
  std::vector<std::uint8_t> missing;     // 1 where the source cell was missing
  std::vector<std::string> lineage;      // transform ids applied, oldest first

  std::size_t size() const {
    return kind == ColumnKind::numeric ? numeric.size() : labels.size();
  }
};

struct Target {
  TaskKind task = TaskKind::regression;
  std::vector<double> values;  // {0,1} for classification
};

struct Dataset {
  std::string name;
  std::string target_name = "target";
  std::size_t n_rows = 0;
  std::vector<FeatureColumn> columns;
  Target target;
  bool has_datetime = false;  // source table contained a datetime column

  const FeatureColumn* find(const std::string& column_name) const;
  std::size_t numeric_count() const;
  std::size_t categorical_count() const;

  // Checks the structural invariants (consistent lengths, unique names,
  // finite numerics, 0/1 classification targets); throws on violation.
  void validate() const;
};

// Per-row fold assignment for k-fold cross-validation.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // values in [0, k)

  std::vector<std::size_t> rows_in(int fold) const;
  std::vector<std::size_t> rows_not_in(int fold) const;
};

// Loads a CSV into a typed dataset:
//  - missing tokens: "", "NA", "?"
//  - kind inference per column: numeric if every present cell parses as a
//    double, else datetime if every present cell parses as ISO 8601, else
//    categorical; declared kinds override inference
//  - numeric missing cells are imputed with the column median (mask kept)
//  - datetime columns expand to name~year/~month/~dow/~hour (median-imputed)
//    plus a name~missing indicator column; dow is 0=Monday..6=Sunday
//  - categorical missing cells become the reserved placeholder label
//  - task inference: classification when every target value is 0 or 1
Dataset load_csv(const std::string& path, const std::string& target_name,
                 const std::map<std::string, ColumnKind>& declared_kinds = {},
                 std::optional<TaskKind> declared_task = {});

// Writes the dataset back out; masked cells become empty fields, numerics
// print round-trip exact. Reloading with matching declarations reproduces
// the dataset cell for cell.
void save_csv(const Dataset& d, const std::string& path);

// Row-subset copy preserving column order, kinds, masks and lineage.
Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& idx,
                  const std::string& name);

// Deterministic train/test split; stratified by class for classification
// (largest-remainder quotas), plain shuffle for regression. Row order within
// each part follows the source. Requires 0 < fraction < 1 and n_rows >= 10;
// throws if a class would end up absent from the training part.
std::pair<Dataset, Dataset> holdout_split(const Dataset& d, double fraction,
                                          std::uint64_t seed);

// Deterministic k-fold plan, class-stratified for classification. Fold sizes
// differ by at most one overall and per class. Requires 2 <= k <= n_rows.
FoldPlan make_folds(const Dataset& d, int k, std::uint64_t seed);

}  // namespace aprl
