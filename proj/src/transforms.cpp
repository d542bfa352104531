#include "aprl/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "aprl/csv.hpp"

namespace aprl {

namespace {

constexpr double kEigenFloor = 1e-12;

std::vector<std::size_t> mask_rows(const std::vector<std::uint8_t>& mask) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) rows.push_back(i);
  return rows;
}

std::set<std::string> column_names(const Dataset& d) {
  std::set<std::string> names;
  for (const auto& c : d.columns) names.insert(c.name);
  return names;
}

std::string derived_name(const std::string& source, TransformId id) {
  return source + "~" + std::string(transform_name(id));
}

// Canonical cell text shared by fitting and replay so lookups agree.
std::string cell_key(const FeatureColumn& c, std::size_t row) {
  return c.kind == ColumnKind::categorical ? c.labels[row] : csv::format_double(c.numeric[row]);
}

bool integral_over(const FeatureColumn& c, const std::vector<std::size_t>& rows) {
  for (std::size_t i : rows) {
    double v = c.numeric[i];
    if (std::floor(v) != v || std::abs(v) > 9.0e15) return false;
  }
  return true;
}

double mean_over(const std::vector<double>& v, const std::vector<std::size_t>& rows) {
  double s = 0;
  for (std::size_t i : rows) s += v[i];
  return s / static_cast<double>(rows.size());
}

// Population standard deviation.
double sigma_over(const std::vector<double>& v, const std::vector<std::size_t>& rows,
                  double mean) {
  double s = 0;
  for (std::size_t i : rows) {
    double d = v[i] - mean;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(rows.size()));
}

double abs_pearson(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<std::size_t>& rows) {
  double mx = mean_over(x, rows), my = mean_over(y, rows);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i : rows) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::abs(sxy / std::sqrt(sxx * syy));
}

FeatureColumn make_derived(std::string name, std::vector<double> values,
                           std::vector<std::string> lineage) {
  FeatureColumn c;
  c.name = std::move(name);
  c.kind = ColumnKind::numeric;
  c.missing.assign(values.size(), 0);
  c.numeric = std::move(values);
  c.lineage = std::move(lineage);
  return c;
}

std::vector<std::string> extend_lineage(const FeatureColumn& src, TransformId id) {
  auto lineage = src.lineage;
  lineage.emplace_back(transform_name(id));
  return lineage;
}

double elementwise_value(TransformId id, double x) {
  switch (id) {
    case TransformId::round: return std::round(x);
    case TransformId::tanh: return std::tanh(x);
    case TransformId::cbrt: return std::cbrt(x);
    case TransformId::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    default: throw std::logic_error("not an elementwise transform");
  }
}

bool is_elementwise(TransformId id) {
  return id == TransformId::round || id == TransformId::tanh || id == TransformId::cbrt ||
         id == TransformId::sigmoid;
}

// ---- fitting ----------------------------------------------------------

TransformSpec fit_freq(const Dataset& d, const std::vector<std::size_t>& rows,
                       const TransformConfig& cfg) {
  TransformSpec spec{TransformId::freq, false, {}};
  FreqParams params;
  auto taken = column_names(d);
  for (const auto& c : d.columns) {
    if (taken.count(derived_name(c.name, TransformId::freq))) continue;
    if (c.kind == ColumnKind::numeric) {
      if (!integral_over(c, rows)) continue;
      std::set<std::string> distinct;
      for (std::size_t i : rows) distinct.insert(cell_key(c, i));
      if (distinct.size() > static_cast<std::size_t>(cfg.freq_distinct_cap)) continue;
    }
    FreqParams::Table table;
    table.source = c.name;
    for (std::size_t i : rows) table.counts[cell_key(c, i)] += 1.0;
    params.tables.push_back(std::move(table));
  }
  if (params.tables.empty())
    spec.noop = true;
  else
    spec.params = std::move(params);
  return spec;
}

TransformSpec fit_elementwise(const Dataset& d, TransformId id) {
  TransformSpec spec{id, false, {}};
  ElementwiseParams params;
  auto taken = column_names(d);
  for (const auto& c : d.columns) {
    if (c.kind != ColumnKind::numeric) continue;
    if (taken.count(derived_name(c.name, id))) continue;
    params.sources.push_back(c.name);
  }
  if (params.sources.empty())
    spec.noop = true;
  else
    spec.params = std::move(params);
  return spec;
}

TransformSpec fit_minmax(const Dataset& d, const std::vector<std::size_t>& rows) {
  TransformSpec spec{TransformId::minmaxscaler, false, {}};
  MinMaxParams params;
  auto taken = column_names(d);
  for (const auto& c : d.columns) {
    if (c.kind != ColumnKind::numeric) continue;
    if (taken.count(derived_name(c.name, TransformId::minmaxscaler))) continue;
    double lo = c.numeric[rows[0]], hi = lo;
    for (std::size_t i : rows) {
      lo = std::min(lo, c.numeric[i]);
      hi = std::max(hi, c.numeric[i]);
    }
    if (lo == hi) continue;  // constant on the training rows
    params.cols.push_back({c.name, lo, hi});
  }
  if (params.cols.empty())
    spec.noop = true;
  else
    spec.params = std::move(params);
  return spec;
}

TransformSpec fit_std(const Dataset& d, const std::vector<std::size_t>& rows) {
  TransformSpec spec{TransformId::stdscaler, false, {}};
  StdParams params;
  auto taken = column_names(d);
  for (const auto& c : d.columns) {
    if (c.kind != ColumnKind::numeric) continue;
    if (taken.count(derived_name(c.name, TransformId::stdscaler))) continue;
    double mean = mean_over(c.numeric, rows);
    double sigma = sigma_over(c.numeric, rows, mean);
    if (sigma == 0.0) continue;
    params.cols.push_back({c.name, mean, sigma});
  }
  if (params.cols.empty())
    spec.noop = true;
  else
    spec.params = std::move(params);
  return spec;
}

TransformSpec fit_pca(const Dataset& d, const std::vector<std::size_t>& rows,
                      const TransformConfig& cfg) {
  TransformSpec spec{TransformId::pca, false, {}};
  PcaParams params;
  for (const auto& c : d.columns) {
    if (c.kind != ColumnKind::numeric) continue;
    double mean = mean_over(c.numeric, rows);
    double sigma = sigma_over(c.numeric, rows, mean);
    if (sigma == 0.0) continue;
    params.sources.push_back(c.name);
    params.means.push_back(mean);
    params.sigmas.push_back(sigma);
  }
  std::size_t p = params.sources.size();
  std::size_t m = rows.size();
  if (p < 2 || m < 2) {
    spec.noop = true;
    return spec;
  }

  // Correlation-style covariance of the standardized training block.
  std::vector<double> cov(p * p, 0.0);
  {
    std::vector<const std::vector<double>*> cols(p);
    for (std::size_t j = 0; j < p; ++j) cols[j] = &d.find(params.sources[j])->numeric;
    std::vector<double> z(p);
    for (std::size_t i : rows) {
      for (std::size_t j = 0; j < p; ++j)
        z[j] = ((*cols[j])[i] - params.means[j]) / params.sigmas[j];
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = a; b < p; ++b) cov[a * p + b] += z[a] * z[b];
    }
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = a; b < p; ++b) {
        cov[a * p + b] /= static_cast<double>(m - 1);
        cov[b * p + a] = cov[a * p + b];
      }
  }

  std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.pca_k), p);
  double lambda1 = 0.0;
  for (std::size_t comp = 0; comp < k; ++comp) {
    // Power iteration on the deflated matrix; deterministic start vector.
    std::vector<double> v(p);
    for (std::size_t j = 0; j < p; ++j) v[j] = 1.0 + 0.01 * static_cast<double>(j + 1);
    auto orthogonalize = [&](std::vector<double>& w) {
      for (const auto& prev : params.components) {
        double dot = 0;
        for (std::size_t j = 0; j < p; ++j) dot += w[j] * prev[j];
        for (std::size_t j = 0; j < p; ++j) w[j] -= dot * prev[j];
      }
    };
    auto normalize = [&](std::vector<double>& w) {
      double n2 = 0;
      for (double x : w) n2 += x * x;
      double n = std::sqrt(n2);
      if (n < 1e-300) return false;
      for (double& x : w) x /= n;
      return true;
    };
    orthogonalize(v);
    if (!normalize(v)) break;
    for (int iter = 0; iter < 1000; ++iter) {
      std::vector<double> w(p, 0.0);
      for (std::size_t a = 0; a < p; ++a) {
        double acc = 0;
        for (std::size_t b = 0; b < p; ++b) acc += cov[a * p + b] * v[b];
        w[a] = acc;
      }
      orthogonalize(w);
      if (!normalize(w)) {
        v.assign(p, 0.0);
        break;
      }
      double delta = 0;
      for (std::size_t j = 0; j < p; ++j) delta = std::max(delta, std::abs(w[j] - v[j]));
      v = std::move(w);
      if (delta < 1e-13) break;
    }
    double lambda = 0;
    for (std::size_t a = 0; a < p; ++a) {
      double acc = 0;
      for (std::size_t b = 0; b < p; ++b) acc += cov[a * p + b] * v[b];
      lambda += v[a] * acc;
    }
    if (comp == 0) lambda1 = lambda;
    if (lambda <= std::max(kEigenFloor, 1e-9 * lambda1)) break;

    // Pin the sign: largest-magnitude coordinate is positive.
    std::size_t top = 0;
    for (std::size_t j = 1; j < p; ++j)
      if (std::abs(v[j]) > std::abs(v[top])) top = j;
    if (v[top] < 0)
      for (double& x : v) x = -x;

    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b < p; ++b) cov[a * p + b] -= lambda * v[a] * v[b];
    params.components.push_back(std::move(v));
  }

  if (params.components.empty()) {
    spec.noop = true;
    return spec;
  }
  // Components whose output names are taken get dropped at replay; if every
  // name is taken the fit is a no-op.
  auto taken = column_names(d);
  bool any_free = false;
  for (std::size_t c = 0; c < params.components.size(); ++c)
    any_free = any_free || !taken.count("pc" + std::to_string(c + 1) + "~pca");
  if (!any_free) {
    spec.noop = true;
    return spec;
  }
  spec.params = std::move(params);
  return spec;
}

TransformSpec fit_groupby(const Dataset& d, const std::vector<std::size_t>& rows,
                          const TransformConfig& cfg) {
  TransformSpec spec{TransformId::groupby_stddev, false, {}};
  std::size_t n_train = rows.size();

  struct Candidate {
    std::size_t key_idx, value_idx;
    double score;
  };
  std::vector<Candidate> candidates;
  auto taken = column_names(d);

  for (std::size_t ki = 0; ki < d.columns.size(); ++ki) {
    const auto& key = d.columns[ki];
    if (key.kind != ColumnKind::categorical) continue;
    std::map<std::string, std::size_t> counts;
    for (std::size_t i : rows) counts[key.labels[i]]++;
    std::size_t card = counts.size();
    if (card < 2 || card > std::max<std::size_t>(2, n_train / 2)) continue;
    for (std::size_t vi = 0; vi < d.columns.size(); ++vi) {
      const auto& value = d.columns[vi];
      if (value.kind != ColumnKind::numeric) continue;
      if (taken.count(value.name + "@" + key.name + "~groupby_stddev")) continue;
      // Between-group variance of the value column: how much the key explains.
      std::map<std::string, std::pair<double, std::size_t>> sums;
      double total = 0;
      for (std::size_t i : rows) {
        auto& acc = sums[key.labels[i]];
        acc.first += value.numeric[i];
        acc.second += 1;
        total += value.numeric[i];
      }
      double overall = total / static_cast<double>(n_train);
      double score = 0;
      for (const auto& [label, acc] : sums) {
        (void)label;
        double mean_g = acc.first / static_cast<double>(acc.second);
        double dg = mean_g - overall;
        score += (static_cast<double>(acc.second) / static_cast<double>(n_train)) * dg * dg;
      }
      candidates.push_back({ki, vi, score});
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  if (candidates.size() > static_cast<std::size_t>(cfg.groupby_pair_cap))
    candidates.resize(static_cast<std::size_t>(cfg.groupby_pair_cap));

  GroupbyParams params;
  for (const auto& cand : candidates) {
    const auto& key = d.columns[cand.key_idx];
    const auto& value = d.columns[cand.value_idx];
    GroupbyParams::Pair pair;
    pair.key = key.name;
    pair.value = value.name;
    std::map<std::string, std::vector<double>> groups;
    for (std::size_t i : rows) groups[key.labels[i]].push_back(value.numeric[i]);
    for (const auto& [label, vals] : groups) {
      if (vals.size() < 2) {
        pair.stddev[label] = 0.0;
        continue;
      }
      double mean = 0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double ss = 0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      pair.stddev[label] = std::sqrt(ss / static_cast<double>(vals.size() - 1));
    }
    params.pairs.push_back(std::move(pair));
  }

  if (params.pairs.empty())
    spec.noop = true;
  else
    spec.params = std::move(params);
  return spec;
}

TransformSpec fit_selection(const Dataset& d, const std::vector<std::size_t>& rows,
                            const TransformConfig& cfg) {
  TransformSpec spec{TransformId::feature_selection, false, {}};
  std::size_t n_cols = d.columns.size();
  auto keep_count = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(cfg.selection_keep_fraction * static_cast<double>(n_cols))));
  keep_count = std::min(keep_count, n_cols);
  if (keep_count == n_cols) {
    spec.noop = true;
    return spec;
  }

  std::vector<std::pair<double, std::size_t>> scored;  // (-score, index) for easy sort
  for (std::size_t j = 0; j < n_cols; ++j) {
    const auto& c = d.columns[j];
    double score;
    if (c.kind == ColumnKind::numeric) {
      score = abs_pearson(c.numeric, d.target.values, rows);
    } else {
      auto codes = frequency_rank_codes(c, rows);
      std::vector<double> coded(d.n_rows, 0.0);
      for (std::size_t i : rows) coded[i] = codes[c.labels[i]];
      score = abs_pearson(coded, d.target.values, rows);
    }
    scored.emplace_back(-score, j);
  }
  std::sort(scored.begin(), scored.end());  // score desc, then column index asc

  std::vector<std::uint8_t> keep(n_cols, 0);
  for (std::size_t r = 0; r < keep_count; ++r) keep[scored[r].second] = 1;
  SelectionParams params;
  for (std::size_t j = 0; j < n_cols; ++j)
    if (keep[j]) params.kept.push_back(d.columns[j].name);
  spec.params = std::move(params);
  return spec;
}

}  // namespace

std::map<std::string, double> frequency_rank_codes(const FeatureColumn& c,
                                                   const std::vector<std::size_t>& rows) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t i : rows) counts[c.labels[i]]++;
  std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<std::string, double> codes;
  for (std::size_t r = 0; r < order.size(); ++r) codes[order[r].first] = static_cast<double>(r);
  return codes;
}

const std::vector<TransformId>& transform_catalog() {
  static const std::vector<TransformId> kCatalog{
      TransformId::freq,     TransformId::pca,          TransformId::round,
      TransformId::minmaxscaler, TransformId::tanh,     TransformId::groupby_stddev,
      TransformId::cbrt,     TransformId::sigmoid,      TransformId::stdscaler,
      TransformId::feature_selection};
  return kCatalog;
}

std::string_view transform_name(TransformId id) {
  switch (id) {
    case TransformId::freq: return "freq";
    case TransformId::pca: return "pca";
    case TransformId::round: return "round";
    case TransformId::minmaxscaler: return "minmaxscaler";
    case TransformId::tanh: return "tanh";
    case TransformId::groupby_stddev: return "groupby_stddev";
    case TransformId::cbrt: return "cbrt";
    case TransformId::sigmoid: return "sigmoid";
    case TransformId::stdscaler: return "stdscaler";
    case TransformId::feature_selection: return "feature_selection";
  }
  return "";
}

std::optional<TransformId> transform_from_name(std::string_view name) {
  for (TransformId id : transform_catalog())
    if (transform_name(id) == name) return id;
  return std::nullopt;
}

std::string TransformSpec::canonical_text() const {
  std::ostringstream out;
  out << "id=" << transform_name(id) << '\n';
  if (noop) {
    out << "noop\n";
    return out.str();
  }
  auto num = [](double v) { return csv::format_double(v); };
  if (auto* f = std::get_if<FreqParams>(&params)) {
    for (const auto& t : f->tables) {
      out << "source=" << t.source << '\n';
      for (const auto& [k, v] : t.counts) out << "  " << k << '\t' << num(v) << '\n';
    }
  } else if (auto* e = std::get_if<ElementwiseParams>(&params)) {
    for (const auto& s : e->sources) out << "source=" << s << '\n';
  } else if (auto* mm = std::get_if<MinMaxParams>(&params)) {
    for (const auto& c : mm->cols)
      out << "source=" << c.source << " min=" << num(c.min) << " max=" << num(c.max) << '\n';
  } else if (auto* sd = std::get_if<StdParams>(&params)) {
    for (const auto& c : sd->cols)
      out << "source=" << c.source << " mean=" << num(c.mean) << " sigma=" << num(c.sigma)
          << '\n';
  } else if (auto* pc = std::get_if<PcaParams>(&params)) {
    out << "sources=";
    for (std::size_t j = 0; j < pc->sources.size(); ++j)
      out << (j ? "," : "") << pc->sources[j];
    out << '\n';
    out << "means=";
    for (std::size_t j = 0; j < pc->means.size(); ++j) out << (j ? "," : "") << num(pc->means[j]);
    out << '\n';
    out << "sigmas=";
    for (std::size_t j = 0; j < pc->sigmas.size(); ++j)
      out << (j ? "," : "") << num(pc->sigmas[j]);
    out << '\n';
    for (const auto& comp : pc->components) {
      out << "component=";
      for (std::size_t j = 0; j < comp.size(); ++j) out << (j ? "," : "") << num(comp[j]);
      out << '\n';
    }
  } else if (auto* g = std::get_if<GroupbyParams>(&params)) {
    for (const auto& pair : g->pairs) {
      out << "pair " << pair.value << "@" << pair.key << '\n';
      for (const auto& [label, sd2] : pair.stddev) out << "  " << label << '\t' << num(sd2) << '\n';
    }
  } else if (auto* sel = std::get_if<SelectionParams>(&params)) {
    out << "keep=";
    for (std::size_t j = 0; j < sel->kept.size(); ++j) out << (j ? "," : "") << sel->kept[j];
    out << '\n';
  }
  return out.str();
}

bool applicable(const Dataset& d, TransformId id) {
  std::size_t numeric = d.numeric_count();
  std::size_t categorical = d.categorical_count();
  switch (id) {
    case TransformId::freq: {
      if (categorical > 0) return true;
      for (const auto& c : d.columns) {
        if (c.kind != ColumnKind::numeric) continue;
        bool integral = true;
        for (double v : c.numeric)
          if (std::floor(v) != v || std::abs(v) > 9.0e15) {
            integral = false;
            break;
          }
        if (integral) return true;
      }
      return false;
    }
    case TransformId::pca: return numeric >= 2;
    case TransformId::round:
    case TransformId::minmaxscaler:
    case TransformId::tanh:
    case TransformId::cbrt:
    case TransformId::sigmoid:
    case TransformId::stdscaler: return numeric >= 1;
    case TransformId::groupby_stddev: return categorical >= 1 && numeric >= 1;
    case TransformId::feature_selection: return d.columns.size() >= 2;
  }
  return false;
}

Dataset replay(const TransformSpec& spec, const Dataset& d) {
  Dataset out = d;
  if (spec.noop) return out;

  auto find_col = [&](const std::string& name) -> const FeatureColumn& {
    const FeatureColumn* c = d.find(name);
    if (!c)
      throw std::runtime_error("replay(" + std::string(transform_name(spec.id)) +
                               "): missing source column '" + name + "'");
    return *c;
  };
  auto taken = column_names(d);
  auto add = [&](FeatureColumn col) {
    if (!taken.insert(col.name).second)
      throw std::runtime_error("replay: output column '" + col.name + "' already exists");
    out.columns.push_back(std::move(col));
  };

  switch (spec.id) {
    case TransformId::freq: {
      const auto& params = std::get<FreqParams>(spec.params);
      for (const auto& table : params.tables) {
        const auto& src = find_col(table.source);
        std::vector<double> values(d.n_rows, 0.0);
        for (std::size_t i = 0; i < d.n_rows; ++i) {
          auto it = table.counts.find(cell_key(src, i));
          values[i] = it == table.counts.end() ? 0.0 : it->second;
        }
        add(make_derived(derived_name(table.source, spec.id), std::move(values),
                         extend_lineage(src, spec.id)));
      }
      break;
    }
    case TransformId::round:
    case TransformId::tanh:
    case TransformId::cbrt:
    case TransformId::sigmoid: {
      const auto& params = std::get<ElementwiseParams>(spec.params);
      for (const auto& name : params.sources) {
        const auto& src = find_col(name);
        std::vector<double> values(d.n_rows);
        for (std::size_t i = 0; i < d.n_rows; ++i)
          values[i] = elementwise_value(spec.id, src.numeric[i]);
        add(make_derived(derived_name(name, spec.id), std::move(values),
                         extend_lineage(src, spec.id)));
      }
      break;
    }
    case TransformId::minmaxscaler: {
      const auto& params = std::get<MinMaxParams>(spec.params);
      for (const auto& col : params.cols) {
        const auto& src = find_col(col.source);
        std::vector<double> values(d.n_rows);
        double range = col.max - col.min;
        for (std::size_t i = 0; i < d.n_rows; ++i)
          values[i] = (src.numeric[i] - col.min) / range;
        add(make_derived(derived_name(col.source, spec.id), std::move(values),
                         extend_lineage(src, spec.id)));
      }
      break;
    }
    case TransformId::stdscaler: {
      const auto& params = std::get<StdParams>(spec.params);
      for (const auto& col : params.cols) {
        const auto& src = find_col(col.source);
        std::vector<double> values(d.n_rows);
        for (std::size_t i = 0; i < d.n_rows; ++i)
          values[i] = (src.numeric[i] - col.mean) / col.sigma;
        add(make_derived(derived_name(col.source, spec.id), std::move(values),
                         extend_lineage(src, spec.id)));
      }
      break;
    }
    case TransformId::pca: {
      const auto& params = std::get<PcaParams>(spec.params);
      std::size_t p = params.sources.size();
      std::vector<const std::vector<double>*> cols(p);
      for (std::size_t j = 0; j < p; ++j) cols[j] = &find_col(params.sources[j]).numeric;
      for (std::size_t cidx = 0; cidx < params.components.size(); ++cidx) {
        std::string name = "pc" + std::to_string(cidx + 1) + "~pca";
        if (taken.count(name)) continue;  // fit marked this slot as occupied
        const auto& comp = params.components[cidx];
        std::vector<double> values(d.n_rows, 0.0);
        for (std::size_t i = 0; i < d.n_rows; ++i) {
          double acc = 0;
          for (std::size_t j = 0; j < p; ++j)
            acc += comp[j] * (((*cols[j])[i] - params.means[j]) / params.sigmas[j]);
          values[i] = acc;
        }
        add(make_derived(std::move(name), std::move(values), {"pca"}));
      }
      break;
    }
    case TransformId::groupby_stddev: {
      const auto& params = std::get<GroupbyParams>(spec.params);
      for (const auto& pair : params.pairs) {
        const auto& key = find_col(pair.key);
        if (key.kind != ColumnKind::categorical)
          throw std::runtime_error("replay(groupby_stddev): key '" + pair.key +
                                   "' is not categorical");
        find_col(pair.value);  // existence check; values come from the table
        std::vector<double> values(d.n_rows, 0.0);
        for (std::size_t i = 0; i < d.n_rows; ++i) {
          auto it = pair.stddev.find(key.labels[i]);
          values[i] = it == pair.stddev.end() ? 0.0 : it->second;
        }
        add(make_derived(pair.value + "@" + pair.key + "~groupby_stddev", std::move(values),
                         {"groupby_stddev"}));
      }
      break;
    }
    case TransformId::feature_selection: {
      const auto& params = std::get<SelectionParams>(spec.params);
      for (const auto& name : params.kept) find_col(name);
      std::set<std::string> kept(params.kept.begin(), params.kept.end());
      std::vector<FeatureColumn> filtered;
      for (auto& c : out.columns)
        if (kept.count(c.name)) filtered.push_back(std::move(c));
      out.columns = std::move(filtered);
      break;
    }
  }
  return out;
}

FitApplyResult fit_apply(const Dataset& d, TransformId id,
                         const std::vector<std::uint8_t>& train_mask,
                         const TransformConfig& cfg) {
  if (train_mask.size() != d.n_rows)
    throw std::invalid_argument("fit_apply: train mask length mismatch");
  auto rows = mask_rows(train_mask);
  if (rows.empty()) throw std::invalid_argument("fit_apply: empty training mask");

  TransformSpec spec;
  if (is_elementwise(id)) {
    spec = fit_elementwise(d, id);
  } else {
    switch (id) {
      case TransformId::freq: spec = fit_freq(d, rows, cfg); break;
      case TransformId::pca: spec = fit_pca(d, rows, cfg); break;
      case TransformId::minmaxscaler: spec = fit_minmax(d, rows); break;
      case TransformId::groupby_stddev: spec = fit_groupby(d, rows, cfg); break;
      case TransformId::stdscaler: spec = fit_std(d, rows); break;
      case TransformId::feature_selection: spec = fit_selection(d, rows, cfg); break;
      default: throw std::logic_error("fit_apply: unhandled transform");
    }
  }
  return {replay(spec, d), spec};
}

FitApplyResult fit_apply(const Dataset& d, TransformId id, const TransformConfig& cfg) {
  return fit_apply(d, id, std::vector<std::uint8_t>(d.n_rows, 1), cfg);
}

}  // namespace aprl
