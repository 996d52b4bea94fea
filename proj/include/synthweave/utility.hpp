#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthweave/dataset.hpp"
#include "synthweave/kernels.hpp"
#include "synthweave/regression.hpp"

namespace synthweave {

struct Cell {
  std::vector<std::string> levels;
  double y = 0.0;  // original count
  double s = 0.0;  // synthetic count
};

/// Joint counts of the two datasets over the same cells.
struct CellTable {
  std::vector<std::string> variables;
  std::vector<Cell> cells;
  /// Bin edges used for each numeric variable (empty for categoricals).
  std::vector<std::vector<double>> breaks;

  std::size_t k() const { return cells.size(); }
  double n_original() const;
  double n_synthetic() const;
  double n_total() const { return n_original() + n_synthetic(); }
};

/// Cross-classifies both datasets by `variables`. Numeric variables are cut
/// at `numeric_bins` quantiles of the original data (duplicate breaks
/// merged); values outside the original range fall into the end bins.
/// Categorical cells span the union of level names, and missing values form
/// their own cell. The full product of levels is listed when it has at most
/// 100000 cells, otherwise only cells observed in either dataset.
CellTable cross_tabulate(const Dataset& original, const Dataset& synthetic, std::span<const std::string> variables,
                         std::size_t numeric_bins = 5, Execution exec = Execution::parallel);

struct UtilityStat {
  double statistic = 0.0;
  std::size_t df = 0;
  double ratio = 0.0;
  /// Upper chi-square tail; absent when the null does not apply.
  std::optional<double> p_value;
};

/// Sum over cells with y + s > 0 of (s - y)^2 / ((y + s) / 2), with
/// df = populated cells - 1.
UtilityStat u_tab(const CellTable& table);

struct CellContribution {
  std::vector<std::string> levels;
  double y = 0.0;
  double s = 0.0;
  double contribution = 0.0;
};

/// Cells ranked by their share of u_tab, largest first.
std::vector<CellContribution> worst_cells(const CellTable& table, std::size_t top = 10);

enum class PropensityModel { main_effects, table_saturated };

struct PropensityTerm {
  std::string label;
  /// Source variable(s) of the term; empty for the intercept.
  std::string variable;
  double coefficient = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool aliased = false;
};

struct PropensityFit {
  PropensityModel model = PropensityModel::main_effects;
  std::vector<std::string> variables;
  std::vector<PropensityTerm> terms;
  /// Mean squared deviation of the fitted scores from c.
  double pmse = 0.0;
  /// Synthetic share of the stacked data.
  double c = 0.5;
  std::size_t n_original = 0;
  std::size_t n_synthetic = 0;
  /// Non-aliased parameters, intercept included.
  std::size_t n_parameters = 0;
  bool converged = true;
  std::vector<std::string> warnings;

  std::size_t n_total() const { return n_original + n_synthetic; }
};

/// Logistic model for "row is synthetic" on the stacked data. main_effects
/// uses an intercept, dummies against each variable's modal level and
/// standardized numeric terms; table_saturated has one parameter per
/// populated cell of cross_tabulate(variables). Identical design rows are
/// collapsed into weighted groups before fitting. An empty `variables`
/// means every column shared by both datasets.
PropensityFit fit_propensity(const Dataset& original, const Dataset& synthetic, PropensityModel model,
                             std::span<const std::string> variables = {}, std::size_t numeric_bins = 5,
                             Execution exec = Execution::parallel);

/// 8 N pMSE with df = parameters - 1. The p-value is only given for equal
/// dataset sizes.
UtilityStat u_gen(const PropensityFit& fit);

struct EquivalenceReport {
  double u_tab = 0.0;
  double u_gen = 0.0;
  /// |u_tab - u_gen| / max(u_tab, 1).
  double relative_difference = 0.0;
  bool equal = false;
};

/// Computes u_tab and the saturated-model u_gen of the same table.
EquivalenceReport equivalence_check(const Dataset& original, const Dataset& synthetic,
                                    std::span<const std::string> variables, double tolerance = 1e-8);

struct VariableFlags {
  std::string variable;
  /// Flagged terms of this variable, by |z| descending.
  std::vector<PropensityTerm> terms;
  double max_abs_z = 0.0;
};

struct Diagnosis {
  double threshold = 1.7;
  /// Every non-intercept term with |z| >= threshold, by |z| descending.
  std::vector<PropensityTerm> terms;
  /// The same terms grouped by source variable, strongest variable first.
  std::vector<VariableFlags> variables;
  std::size_t n_terms_tested = 0;
};

Diagnosis diagnose(const PropensityFit& fit, double threshold = 1.7);

}  // namespace synthweave
