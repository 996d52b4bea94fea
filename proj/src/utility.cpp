#include "synthweave/utility.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <unordered_map>

#include "synthweave/design.hpp"
#include "synthweave/stats.hpp"

namespace synthweave {

namespace {

constexpr std::size_t kMaxFullProduct = 100000;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Encoding of one table variable shared by both datasets.
struct Axis {
  std::vector<std::string> labels;
  std::vector<double> breaks;
  std::vector<std::int32_t> orig;
  std::vector<std::int32_t> syn;
};

void check_variable(const Dataset& original, const Dataset& synthetic, const std::string& v) {
  if (!original.has(v)) throw DataError("variable '" + v + "' is not in the original data");
  if (!synthetic.has(v)) throw DataError("variable '" + v + "' is not in the synthetic data");
  if (original.column(v).kind() != synthetic.column(v).kind()) {
    throw DataError("variable '" + v + "' is " + std::string(kind_name(original.column(v).kind())) +
                    " in the original data but " + std::string(kind_name(synthetic.column(v).kind())) +
                    " in the synthetic data");
  }
}

Axis categorical_axis(const Column& a, const Column& b) {
  Axis axis;
  std::unordered_map<std::string, std::int32_t> index;
  // Levels in first-seen order over the original level table, then the synthetic one.
  std::vector<std::uint8_t> used_a(a.level_count(), 0);
  std::vector<std::uint8_t> used_b(b.level_count(), 0);
  bool any_missing = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.missing(i)) any_missing = true; else used_a[static_cast<std::size_t>(a.code(i))] = 1;
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b.missing(i)) any_missing = true; else used_b[static_cast<std::size_t>(b.code(i))] = 1;
  }
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = index.emplace(name, static_cast<std::int32_t>(axis.labels.size()));
    if (inserted) axis.labels.push_back(name);
    return it->second;
  };
  std::vector<std::int32_t> map_a(a.level_count(), -1);
  std::vector<std::int32_t> map_b(b.level_count(), -1);
  for (std::size_t l = 0; l < a.level_count(); ++l) {
    if (used_a[l]) map_a[l] = intern(a.levels()[l]);
  }
  for (std::size_t l = 0; l < b.level_count(); ++l) {
    if (used_b[l]) map_b[l] = intern(b.levels()[l]);
  }
  std::int32_t na = -1;
  if (any_missing) {
    std::string name = "NA";
    while (index.count(name)) name = "<" + name + ">";
    na = intern(name);
  }
  axis.orig.resize(a.size());
  axis.syn.resize(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) axis.orig[i] = a.missing(i) ? na : map_a[static_cast<std::size_t>(a.code(i))];
  for (std::size_t i = 0; i < b.size(); ++i) axis.syn[i] = b.missing(i) ? na : map_b[static_cast<std::size_t>(b.code(i))];
  return axis;
}

Axis numeric_axis(const Column& a, const Column& b, std::size_t bins) {
  Axis axis;
  std::vector<double> sorted;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.missing(i)) sorted.push_back(a.number(i));
  }
  std::sort(sorted.begin(), sorted.end());
  if (!sorted.empty()) {
    for (std::size_t q = 1; q < bins; ++q) {
      const double br = quantile_sorted(sorted, static_cast<double>(q) / static_cast<double>(bins));
      if (br < sorted.back() && (axis.breaks.empty() || br > axis.breaks.back())) axis.breaks.push_back(br);
    }
    const std::size_t nb = axis.breaks.size() + 1;
    for (std::size_t k = 0; k < nb; ++k) {
      const std::string lo = k == 0 ? "[" + format_number(sorted.front()) : "(" + format_number(axis.breaks[k - 1]);
      const std::string hi = k + 1 == nb ? format_number(sorted.back()) : format_number(axis.breaks[k]);
      axis.labels.push_back(lo + "," + hi + "]");
    }
  }
  auto bin_of = [&](double v) {
    return static_cast<std::int32_t>(std::lower_bound(axis.breaks.begin(), axis.breaks.end(), v) - axis.breaks.begin());
  };
  const bool any_missing = a.has_missing() || b.has_missing();
  const auto na = static_cast<std::int32_t>(axis.labels.size());
  if (any_missing) axis.labels.push_back("NA");
  if (sorted.empty() && b.size() > b.missing_count()) {
    // No observed original values: one bin holds every synthetic value.
    axis.labels.insert(axis.labels.begin(), "all");
  }
  const std::int32_t shift = sorted.empty() && b.size() > b.missing_count() ? 1 : 0;
  axis.orig.resize(a.size());
  axis.syn.resize(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) axis.orig[i] = a.missing(i) ? na + shift : bin_of(a.number(i));
  for (std::size_t i = 0; i < b.size(); ++i) axis.syn[i] = b.missing(i) ? na + shift : (shift ? 0 : bin_of(b.number(i)));
  return axis;
}

// Both datasets restricted to `variables`, categorical level tables merged by name.
std::pair<Dataset, Dataset> harmonize(const Dataset& original, const Dataset& synthetic,
                                      std::span<const std::string> variables) {
  Dataset a(original.n_rows());
  Dataset b(synthetic.n_rows());
  for (const auto& v : variables) {
    const Column& ca = original.column(v);
    const Column& cb = synthetic.column(v);
    if (ca.is_numeric() || ca.same_domain(cb)) {
      a.add_column(ca);
      b.add_column(cb);
      continue;
    }
    std::vector<std::string> levels = ca.levels();
    std::unordered_map<std::string, std::int32_t> index;
    for (std::size_t l = 0; l < levels.size(); ++l) index.emplace(levels[l], static_cast<std::int32_t>(l));
    std::vector<std::int32_t> remap(cb.level_count());
    for (std::size_t l = 0; l < cb.level_count(); ++l) {
      auto [it, inserted] = index.emplace(cb.levels()[l], static_cast<std::int32_t>(levels.size()));
      if (inserted) levels.push_back(cb.levels()[l]);
      remap[l] = it->second;
    }
    std::vector<std::int32_t> codes_a(ca.codes().begin(), ca.codes().end());
    std::vector<std::int32_t> codes_b(cb.size());
    for (std::size_t i = 0; i < cb.size(); ++i) codes_b[i] = cb.missing(i) ? 0 : remap[static_cast<std::size_t>(cb.code(i))];
    std::vector<std::uint8_t> miss_a(ca.missing_mask().begin(), ca.missing_mask().end());
    std::vector<std::uint8_t> miss_b(cb.missing_mask().begin(), cb.missing_mask().end());
    for (std::size_t i = 0; i < codes_a.size(); ++i) if (miss_a[i]) codes_a[i] = 0;
    a.add_column(Column::categorical(v, levels, std::move(codes_a), std::move(miss_a)));
    b.add_column(Column::categorical(v, levels, std::move(codes_b), std::move(miss_b)));
  }
  return {std::move(a), std::move(b)};
}

std::vector<std::string> shared_variables(const Dataset& original, const Dataset& synthetic) {
  std::vector<std::string> out;
  for (const auto& c : original.columns()) {
    if (synthetic.has(c.name())) out.push_back(c.name());
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

}  // namespace

double CellTable::n_original() const {
  double t = 0.0;
  for (const auto& c : cells) t += c.y;
  return t;
}

double CellTable::n_synthetic() const {
  double t = 0.0;
  for (const auto& c : cells) t += c.s;
  return t;
}

CellTable cross_tabulate(const Dataset& original, const Dataset& synthetic, std::span<const std::string> variables,
                         std::size_t numeric_bins, Execution exec) {
  if (variables.empty()) throw DataError("a table needs at least one variable");
  if (numeric_bins < 1) throw DataError("numeric_bins must be at least 1");
  CellTable table;
  std::vector<Axis> axes;
  for (const auto& v : variables) {
    check_variable(original, synthetic, v);
    const Column& a = original.column(v);
    const Column& b = synthetic.column(v);
    axes.push_back(a.is_categorical() ? categorical_axis(a, b) : numeric_axis(a, b, numeric_bins));
    table.variables.push_back(v);
    table.breaks.push_back(axes.back().breaks);
  }

  double product = 1.0;
  for (const auto& ax : axes) product *= static_cast<double>(std::max<std::size_t>(ax.labels.size(), 1));
  auto cell_index = [&](const std::vector<std::int32_t> Axis::*side, std::size_t row) {
    std::int64_t idx = 0;
    for (const auto& ax : axes) idx = idx * static_cast<std::int64_t>(ax.labels.size()) + (ax.*side)[row];
    return idx;
  };
  auto levels_of = [&](std::int64_t idx) {
    std::vector<std::string> lv(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      const auto L = static_cast<std::int64_t>(axes[k].labels.size());
      lv[k] = axes[k].labels[static_cast<std::size_t>(idx % L)];
      idx /= L;
    }
    return lv;
  };

  if (product <= static_cast<double>(kMaxFullProduct)) {
    const auto k = static_cast<std::size_t>(product);
    std::vector<std::int32_t> ci(original.n_rows());
    for (std::size_t i = 0; i < ci.size(); ++i) ci[i] = static_cast<std::int32_t>(cell_index(&Axis::orig, i));
    const auto y = count_cells(ci, k, exec);
    ci.resize(synthetic.n_rows());
    for (std::size_t i = 0; i < ci.size(); ++i) ci[i] = static_cast<std::int32_t>(cell_index(&Axis::syn, i));
    const auto s = count_cells(ci, k, exec);
    table.cells.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      table.cells.push_back({levels_of(static_cast<std::int64_t>(c)), static_cast<double>(y[c]), static_cast<double>(s[c])});
    }
    return table;
  }

  std::map<std::int64_t, std::pair<double, double>> observed;
  for (std::size_t i = 0; i < original.n_rows(); ++i) observed[cell_index(&Axis::orig, i)].first += 1.0;
  for (std::size_t i = 0; i < synthetic.n_rows(); ++i) observed[cell_index(&Axis::syn, i)].second += 1.0;
  table.cells.reserve(observed.size());
  for (const auto& [idx, ys] : observed) table.cells.push_back({levels_of(idx), ys.first, ys.second});
  return table;
}

UtilityStat u_tab(const CellTable& table) {
  UtilityStat out;
  std::size_t populated = 0;
  for (const auto& c : table.cells) {
    const double m = c.y + c.s;
    if (m <= 0.0) continue;
    ++populated;
    out.statistic += (c.s - c.y) * (c.s - c.y) / (m / 2.0);
  }
  if (populated < 2) {
    throw DataError("table " + join(table.variables, "*") + " has fewer than 2 populated cells");
  }
  out.df = populated - 1;
  out.ratio = out.statistic / static_cast<double>(out.df);
  out.p_value = chisq_upper_tail(out.statistic, static_cast<double>(out.df));
  return out;
}

std::vector<CellContribution> worst_cells(const CellTable& table, std::size_t top) {
  std::vector<CellContribution> out;
  for (const auto& c : table.cells) {
    const double m = c.y + c.s;
    if (m <= 0.0) continue;
    out.push_back({c.levels, c.y, c.s, (c.s - c.y) * (c.s - c.y) / (m / 2.0)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CellContribution& a, const CellContribution& b) { return a.contribution > b.contribution; });
  if (out.size() > top) out.resize(top);
  return out;
}

PropensityFit fit_propensity(const Dataset& original, const Dataset& synthetic, PropensityModel model,
                             std::span<const std::string> variables, std::size_t numeric_bins, Execution exec) {
  std::vector<std::string> vars(variables.begin(), variables.end());
  if (vars.empty()) vars = shared_variables(original, synthetic);
  if (vars.empty()) throw DataError("the datasets share no variables");
  for (const auto& v : vars) check_variable(original, synthetic, v);
  if (original.n_rows() == 0 || synthetic.n_rows() == 0) throw DataError("propensity model needs rows from both datasets");

  PropensityFit fit;
  fit.model = model;
  fit.variables = vars;
  fit.n_original = original.n_rows();
  fit.n_synthetic = synthetic.n_rows();
  const double n = static_cast<double>(fit.n_total());
  fit.c = static_cast<double>(fit.n_synthetic) / n;

  Eigen::MatrixXd xg;
  std::vector<double> yg;
  std::vector<double> wg;
  std::vector<std::string> labels;
  std::vector<std::string> term_vars;
  LogitOptions opts;

  if (model == PropensityModel::table_saturated) {
    const CellTable table = cross_tabulate(original, synthetic, vars, numeric_bins, exec);
    const std::string var_name = join(vars, "*");
    for (const auto& c : table.cells) {
      const double m = c.y + c.s;
      if (m <= 0.0) continue;
      yg.push_back(c.s / m);
      wg.push_back(m);
      std::vector<std::string> parts;
      for (std::size_t k = 0; k < vars.size(); ++k) parts.push_back(vars[k] + "=" + c.levels[k]);
      labels.push_back(join(parts, ":"));
      term_vars.push_back(var_name);
    }
    xg = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(yg.size()), static_cast<Eigen::Index>(yg.size()));
    opts.tol = 1e-12;
    opts.max_iter = 200;
  } else {
    auto [a, b] = harmonize(original, synthetic, vars);
    const Dataset parts[] = {std::move(a), std::move(b)};
    const Dataset stacked = concat_rows(parts);
    DesignEncoder::Options eo;
    eo.reference = ReferenceLevel::modal;
    eo.standardize = true;
    const DesignEncoder enc = DesignEncoder::fit(stacked, eo);
    for (const auto& note : enc.notes()) fit.warnings.push_back(note);
    const Eigen::MatrixXd x = enc.encode(stacked);
    for (const auto& t : enc.terms()) {
      labels.push_back(t.label);
      term_vars.push_back(t.variable);
    }

    // Collapse identical design rows into weighted groups.
    const auto p = x.cols();
    std::unordered_map<std::string, std::size_t> groups;
    std::vector<Eigen::Index> first_row;
    std::vector<double> syn_count;
    std::string key(static_cast<std::size_t>(p) * sizeof(double), '\0');
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < p; ++j) {
        const double v = x(i, j);
        std::memcpy(key.data() + j * static_cast<Eigen::Index>(sizeof(double)), &v, sizeof(double));
      }
      auto [it, inserted] = groups.emplace(key, first_row.size());
      if (inserted) {
        first_row.push_back(i);
        syn_count.push_back(0.0);
        wg.push_back(0.0);
      }
      wg[it->second] += 1.0;
      if (static_cast<std::size_t>(i) >= fit.n_original) syn_count[it->second] += 1.0;
    }
    xg.resize(static_cast<Eigen::Index>(first_row.size()), p);
    yg.resize(first_row.size());
    for (std::size_t g = 0; g < first_row.size(); ++g) {
      xg.row(static_cast<Eigen::Index>(g)) = x.row(first_row[g]);
      yg[g] = syn_count[g] / wg[g];
    }
    opts.tol = 1e-8;
  }

  const LogitFit lf = fit_logit(xg, yg, wg, opts, exec);
  fit.converged = lf.converged;
  for (const auto& w : lf.warnings) fit.warnings.push_back(w);
  fit.n_parameters = lf.rank();
  double sum = 0.0;
  for (std::size_t g = 0; g < yg.size(); ++g) {
    const double d = lf.fitted(static_cast<Eigen::Index>(g)) - fit.c;
    sum += wg[g] * d * d;
  }
  fit.pmse = sum / n;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    PropensityTerm t;
    t.label = labels[j];
    t.variable = term_vars[j];
    t.aliased = lf.aliased[j];
    t.coefficient = lf.beta(static_cast<Eigen::Index>(j));
    t.se = lf.se(static_cast<Eigen::Index>(j));
    t.z = t.aliased ? std::numeric_limits<double>::quiet_NaN() : t.coefficient / t.se;
    fit.terms.push_back(std::move(t));
  }
  if (fit.n_original != fit.n_synthetic) {
    fit.warnings.push_back("original and synthetic sizes differ; the chi-square null for U_gen does not apply");
  }
  return fit;
}

UtilityStat u_gen(const PropensityFit& fit) {
  UtilityStat out;
  out.statistic = 8.0 * static_cast<double>(fit.n_total()) * fit.pmse;
  out.df = fit.n_parameters > 0 ? fit.n_parameters - 1 : 0;
  out.ratio = out.df > 0 ? out.statistic / static_cast<double>(out.df) : 0.0;
  if (fit.n_original == fit.n_synthetic && out.df > 0) {
    out.p_value = chisq_upper_tail(out.statistic, static_cast<double>(out.df));
  }
  return out;
}

EquivalenceReport equivalence_check(const Dataset& original, const Dataset& synthetic,
                                    std::span<const std::string> variables, double tolerance) {
  EquivalenceReport rep;
  rep.u_tab = u_tab(cross_tabulate(original, synthetic, variables)).statistic;
  rep.u_gen = u_gen(fit_propensity(original, synthetic, PropensityModel::table_saturated, variables)).statistic;
  rep.relative_difference = std::abs(rep.u_tab - rep.u_gen) / std::max(rep.u_tab, 1.0);
  rep.equal = rep.relative_difference <= tolerance;
  return rep;
}

Diagnosis diagnose(const PropensityFit& fit, double threshold) {
  Diagnosis d;
  d.threshold = threshold;
  for (const auto& t : fit.terms) {
    if (t.variable.empty() || t.aliased || std::isnan(t.z)) continue;
    ++d.n_terms_tested;
    if (std::abs(t.z) >= threshold) d.terms.push_back(t);
  }
  std::stable_sort(d.terms.begin(), d.terms.end(),
                   [](const PropensityTerm& a, const PropensityTerm& b) { return std::abs(a.z) > std::abs(b.z); });
  for (const auto& t : d.terms) {
    auto it = std::find_if(d.variables.begin(), d.variables.end(),
                           [&](const VariableFlags& v) { return v.variable == t.variable; });
    if (it == d.variables.end()) {
      d.variables.push_back({t.variable, {}, std::abs(t.z)});
      it = d.variables.end() - 1;
    }
    it->terms.push_back(t);
  }
  return d;
}

}  // namespace synthweave
