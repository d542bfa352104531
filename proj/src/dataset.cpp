#include "aprl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

#include "aprl/csv.hpp"
#include "aprl/rng.hpp"

namespace aprl {

namespace {

bool is_missing_token(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "?";
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return v;
}

struct CivilTime {
  int year, month, day, hour, minute, second;
};

bool parse_fixed_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

int days_in_month(int year, int month) {
  static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2) {
    bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 29 : 28;
  }
  return kDays[month - 1];
}

// ISO 8601 date with optional time: YYYY-MM-DD[( |T)HH:MM[:SS]].
std::optional<CivilTime> parse_datetime(const std::string& s) {
  CivilTime t{0, 0, 0, 0, 0, 0};
  if (s.size() != 10 && s.size() != 16 && s.size() != 19) return std::nullopt;
  if (!parse_fixed_int(s, 0, 4, t.year) || s[4] != '-' ||
      !parse_fixed_int(s, 5, 2, t.month) || s[7] != '-' ||
      !parse_fixed_int(s, 8, 2, t.day))
    return std::nullopt;
  if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > days_in_month(t.year, t.month))
    return std::nullopt;
  if (s.size() > 10) {
    if (s[10] != ' ' && s[10] != 'T') return std::nullopt;
    if (!parse_fixed_int(s, 11, 2, t.hour) || s[13] != ':' ||
        !parse_fixed_int(s, 14, 2, t.minute))
      return std::nullopt;
    if (t.hour > 23 || t.minute > 59) return std::nullopt;
    if (s.size() == 19) {
      if (s[16] != ':' || !parse_fixed_int(s, 17, 2, t.second) || t.second > 60)
        return std::nullopt;
    }
  }
  return t;
}

// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
long long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  long long era = (y >= 0 ? y : y - 399) / 400;
  long long yoe = y - era * 400;
  long long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  long long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

// 0 = Monday .. 6 = Sunday.
int iso_weekday(const CivilTime& t) {
  long long z = days_from_civil(t.year, t.month, t.day);
  long long sun0 = z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6;  // 0 = Sunday
  return static_cast<int>((sun0 + 6) % 7);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Builds an imputed numeric column from parsed values + mask.
FeatureColumn numeric_column(std::string name, std::vector<double> values,
                             std::vector<std::uint8_t> missing) {
  double med = 0.0;
  {
    std::vector<double> present;
    present.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!missing[i]) present.push_back(values[i]);
    med = median_of(std::move(present));
  }
  for (std::size_t i = 0; i < values.size(); ++i)
    if (missing[i]) values[i] = med;
  FeatureColumn col;
  col.name = std::move(name);
  col.kind = ColumnKind::numeric;
  col.numeric = std::move(values);
  col.missing = std::move(missing);
  return col;
}

std::string path_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  return base.empty() ? "dataset" : base;
}

}  // namespace

std::string_view task_name(TaskKind t) {
  return t == TaskKind::binary_classification ? "classification" : "regression";
}

std::optional<TaskKind> task_from_name(std::string_view s) {
  if (s == "classification") return TaskKind::binary_classification;
  if (s == "regression") return TaskKind::regression;
  return std::nullopt;
}

std::string_view column_kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::datetime: return "datetime";
  }
  return "numeric";
}

std::optional<ColumnKind> column_kind_from_name(std::string_view s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "datetime") return ColumnKind::datetime;
  return std::nullopt;
}

const FeatureColumn* Dataset::find(const std::string& column_name) const {
  for (const auto& c : columns)
    if (c.name == column_name) return &c;
  return nullptr;
}

std::size_t Dataset::numeric_count() const {
  std::size_t n = 0;
  for (const auto& c : columns) n += c.kind == ColumnKind::numeric;
  return n;
}

std::size_t Dataset::categorical_count() const {
  std::size_t n = 0;
  for (const auto& c : columns) n += c.kind == ColumnKind::categorical;
  return n;
}

void Dataset::validate() const {
  if (target.values.size() != n_rows)
    throw std::runtime_error("dataset '" + name + "': target length mismatch");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw std::runtime_error("dataset '" + name + "': empty column name");
    if (!seen.insert(c.name).second)
      throw std::runtime_error("dataset '" + name + "': duplicate column '" + c.name + "'");
    if (c.size() != n_rows || c.missing.size() != n_rows)
      throw std::runtime_error("dataset '" + name + "': column '" + c.name + "' length mismatch");
    if (c.kind == ColumnKind::numeric) {
      for (double v : c.numeric)
        if (!std::isfinite(v))
          throw std::runtime_error("dataset '" + name + "': non-finite value in '" + c.name + "'");
    } else if (c.kind == ColumnKind::datetime) {
      throw std::runtime_error("dataset '" + name + "': unexpanded datetime column '" + c.name + "'");
    }
  }
  if (target.task == TaskKind::binary_classification) {
    for (double v : target.values)
      if (v != 0.0 && v != 1.0)
        throw std::runtime_error("dataset '" + name + "': classification target must be 0/1");
  } else {
    for (double v : target.values)
      if (!std::isfinite(v))
        throw std::runtime_error("dataset '" + name + "': non-finite target value");
  }
}

std::vector<std::size_t> FoldPlan::rows_in(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::rows_not_in(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) out.push_back(i);
  return out;
}

Dataset load_csv(const std::string& path, const std::string& target_name,
                 const std::map<std::string, ColumnKind>& declared_kinds,
                 std::optional<TaskKind> declared_task) {
  csv::Table t = csv::read_file(path);
  if (t.rows.empty()) throw std::runtime_error("'" + path + "': zero data rows");

  std::size_t n = t.rows.size();
  std::size_t target_idx = t.header.size();
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == target_name) target_idx = j;
  if (target_idx == t.header.size())
    throw std::runtime_error("'" + path + "': target column '" + target_name + "' not found");

  for (const auto& [col, kind] : declared_kinds) {
    (void)kind;
    bool found = false;
    for (const auto& h : t.header) found = found || h == col;
    if (!found) throw std::runtime_error("'" + path + "': declared kind for unknown column '" + col + "'");
  }

  Dataset d;
  d.name = path_stem(path);
  d.target_name = target_name;
  d.n_rows = n;

  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (j == target_idx) continue;
    const std::string& col_name = t.header[j];

    std::vector<std::uint8_t> missing(n, 0);
    for (std::size_t i = 0; i < n; ++i) missing[i] = is_missing_token(t.rows[i][j]);

    ColumnKind kind;
    if (auto it = declared_kinds.find(col_name); it != declared_kinds.end()) {
      kind = it->second;
    } else {
      bool all_numeric = true, all_datetime = true, any_present = false;
      for (std::size_t i = 0; i < n && (all_numeric || all_datetime); ++i) {
        if (missing[i]) continue;
        any_present = true;
        if (all_numeric && !parse_double(t.rows[i][j])) all_numeric = false;
        if (all_datetime && !parse_datetime(t.rows[i][j])) all_datetime = false;
      }
      if (!any_present) all_datetime = false;  // an all-missing column defaults to numeric
      kind = all_numeric    ? ColumnKind::numeric
             : all_datetime ? ColumnKind::datetime
                            : ColumnKind::categorical;
    }

    if (kind == ColumnKind::numeric) {
      std::vector<double> values(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (missing[i]) continue;
        auto v = parse_double(t.rows[i][j]);
        if (!v) throw std::runtime_error("'" + path + "': column '" + col_name +
                                         "' declared numeric but row " + std::to_string(i + 1) +
                                         " is '" + t.rows[i][j] + "'");
        if (!std::isfinite(*v))
          throw std::runtime_error("'" + path + "': non-finite value in column '" + col_name + "'");
        values[i] = *v;
      }
      d.columns.push_back(numeric_column(col_name, std::move(values), std::move(missing)));
    } else if (kind == ColumnKind::datetime) {
      d.has_datetime = true;
      std::vector<double> year(n, 0), month(n, 0), dow(n, 0), hour(n, 0), flag(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (missing[i]) {
          flag[i] = 1.0;
          continue;
        }
        auto ct = parse_datetime(t.rows[i][j]);
        if (!ct) throw std::runtime_error("'" + path + "': column '" + col_name +
                                          "' declared datetime but row " + std::to_string(i + 1) +
                                          " is '" + t.rows[i][j] + "'");
        year[i] = ct->year;
        month[i] = ct->month;
        dow[i] = iso_weekday(*ct);
        hour[i] = ct->hour;
      }
      d.columns.push_back(numeric_column(col_name + "~year", std::move(year), missing));
      d.columns.push_back(numeric_column(col_name + "~month", std::move(month), missing));
      d.columns.push_back(numeric_column(col_name + "~dow", std::move(dow), missing));
      d.columns.push_back(numeric_column(col_name + "~hour", std::move(hour), missing));
      FeatureColumn present;
      present.name = col_name + "~missing";
      present.kind = ColumnKind::numeric;
      present.numeric = std::move(flag);
      present.missing.assign(n, 0);
      d.columns.push_back(std::move(present));
    } else {
      FeatureColumn col;
      col.name = col_name;
      col.kind = ColumnKind::categorical;
      col.labels.resize(n);
      for (std::size_t i = 0; i < n; ++i)
        col.labels[i] = missing[i] ? kMissingLabel : t.rows[i][j];
      col.missing = std::move(missing);
      d.columns.push_back(std::move(col));
    }
  }

  d.target.values.resize(n);
  bool zero_one_only = true;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& cell = t.rows[i][target_idx];
    if (is_missing_token(cell))
      throw std::runtime_error("'" + path + "': missing target value at row " + std::to_string(i + 1));
    auto v = parse_double(cell);
    if (!v || !std::isfinite(*v))
      throw std::runtime_error("'" + path + "': target value '" + cell + "' at row " +
                               std::to_string(i + 1) + " is not numeric");
    d.target.values[i] = *v;
    zero_one_only = zero_one_only && (*v == 0.0 || *v == 1.0);
  }
  d.target.task = declared_task.value_or(zero_one_only ? TaskKind::binary_classification
                                                       : TaskKind::regression);
  d.validate();
  return d;
}

void save_csv(const Dataset& d, const std::string& path) {
  csv::Table t;
  for (const auto& c : d.columns) t.header.push_back(c.name);
  t.header.push_back(d.target_name);
  t.rows.assign(d.n_rows, {});
  for (std::size_t i = 0; i < d.n_rows; ++i) {
    auto& row = t.rows[i];
    row.reserve(d.columns.size() + 1);
    for (const auto& c : d.columns) {
      if (c.missing[i])
        row.emplace_back();
      else if (c.kind == ColumnKind::numeric)
        row.push_back(csv::format_double(c.numeric[i]));
      else
        row.push_back(c.labels[i]);
    }
    row.push_back(csv::format_double(d.target.values[i]));
  }
  csv::write_file(path, t);
}

Dataset take_rows(const Dataset& d, const std::vector<std::size_t>& idx,
                  const std::string& name) {
  Dataset out;
  out.name = name;
  out.target_name = d.target_name;
  out.n_rows = idx.size();
  out.has_datetime = d.has_datetime;
  out.target.task = d.target.task;
  out.target.values.reserve(idx.size());
  for (std::size_t i : idx) out.target.values.push_back(d.target.values[i]);
  out.columns.reserve(d.columns.size());
  for (const auto& c : d.columns) {
    FeatureColumn nc;
    nc.name = c.name;
    nc.kind = c.kind;
    nc.lineage = c.lineage;
    nc.missing.reserve(idx.size());
    for (std::size_t i : idx) nc.missing.push_back(c.missing[i]);
    if (c.kind == ColumnKind::numeric) {
      nc.numeric.reserve(idx.size());
      for (std::size_t i : idx) nc.numeric.push_back(c.numeric[i]);
    } else {
      nc.labels.reserve(idx.size());
      for (std::size_t i : idx) nc.labels.push_back(c.labels[i]);
    }
    out.columns.push_back(std::move(nc));
  }
  return out;
}

std::pair<Dataset, Dataset> holdout_split(const Dataset& d, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("holdout fraction must be in (0, 1)");
  if (d.n_rows < 10)
    throw std::runtime_error("holdout split needs at least 10 rows, got " +
                             std::to_string(d.n_rows));
  Rng rng(seed);
  std::size_t n = d.n_rows;
  auto n_test_total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  n_test_total = std::min(std::max<std::size_t>(n_test_total, 1), n - 1);

  std::vector<std::size_t> test_idx;
  if (d.target.task == TaskKind::binary_classification) {
    // Per-class quotas by largest remainder so class ratios carry over.
    std::vector<std::vector<std::size_t>> by_class(2);
    for (std::size_t i = 0; i < n; ++i)
      by_class[d.target.values[i] == 1.0 ? 1 : 0].push_back(i);

    std::size_t base[2];
    double frac[2];
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
      double ideal = fraction * static_cast<double>(by_class[c].size());
      base[c] = static_cast<std::size_t>(std::floor(ideal));
      frac[c] = ideal - static_cast<double>(base[c]);
      assigned += base[c];
    }
    for (std::size_t r = assigned; r < n_test_total; ++r) {
      int pick = frac[0] >= frac[1] ? 0 : 1;
      base[pick] += 1;
      frac[pick] = -1.0;
    }
    for (int c = 0; c < 2; ++c) {
      auto& rows = by_class[c];
      if (!rows.empty() && base[c] >= rows.size())
        throw std::runtime_error("holdout split would leave class " + std::to_string(c) +
                                 " empty in the training part");
      Rng class_rng = rng.split("class", static_cast<std::uint64_t>(c));
      shuffle(rows, class_rng);
      test_idx.insert(test_idx.end(), rows.begin(), rows.begin() + static_cast<long>(base[c]));
    }
  } else {
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    Rng row_rng = rng.split("rows");
    shuffle(rows, row_rng);
    test_idx.assign(rows.begin(), rows.begin() + static_cast<long>(n_test_total));
  }

  std::sort(test_idx.begin(), test_idx.end());
  std::vector<std::uint8_t> in_test(n, 0);
  for (std::size_t i : test_idx) in_test[i] = 1;
  std::vector<std::size_t> train_idx;
  train_idx.reserve(n - test_idx.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!in_test[i]) train_idx.push_back(i);

  return {take_rows(d, train_idx, d.name + ":train"), take_rows(d, test_idx, d.name + ":test")};
}

FoldPlan make_folds(const Dataset& d, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > d.n_rows)
    throw std::invalid_argument("fold count must satisfy 2 <= k <= n_rows");
  Rng rng(seed);
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(d.n_rows, 0);

  std::vector<std::vector<std::size_t>> groups;
  if (d.target.task == TaskKind::binary_classification) {
    groups.resize(2);
    for (std::size_t i = 0; i < d.n_rows; ++i)
      groups[d.target.values[i] == 1.0 ? 1 : 0].push_back(i);
  } else {
    groups.resize(1);
    groups[0].resize(d.n_rows);
    for (std::size_t i = 0; i < d.n_rows; ++i) groups[0][i] = i;
  }

  // Round-robin within each class; the starting fold rolls over between
  // classes so overall fold sizes stay within one of each other.
  int start = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& rows = groups[g];
    Rng group_rng = rng.split("fold-class", g);
    shuffle(rows, group_rng);
    for (std::size_t j = 0; j < rows.size(); ++j)
      plan.assignment[rows[j]] = (start + static_cast<int>(j % static_cast<std::size_t>(k))) % k;
    start = (start + static_cast<int>(rows.size() % static_cast<std::size_t>(k))) % k;
  }
  return plan;
}

}  // namespace aprl
