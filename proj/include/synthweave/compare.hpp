#pragma once

#include <span>
#include <string>
#include <vector>

#include "synthweave/dataset.hpp"

namespace synthweave {

struct LevelShare {
  std::string level;
  double original = 0.0;
  double synthetic = 0.0;
};

struct NumericSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::size_t missing = 0;
};

struct UnivariateComparison {
  std::string variable;
  Kind kind = Kind::categorical;
  /// Categorical: level proportions (missing as "NA"). Numeric: share per
  /// histogram bin, labelled by its interval.
  std::vector<LevelShare> shares;
  double max_abs_difference = 0.0;
  /// Numeric only: the 21 bin edges, taken from the original data.
  std::vector<double> breaks;
  NumericSummary original;
  NumericSummary synthetic;
  /// Numeric only: synthetic values fall outside the original range.
  bool range_exceeded = false;
};

/// Per-variable comparison of every column shared by both datasets.
std::vector<UnivariateComparison> compare_univariate(const Dataset& original, const Dataset& synthetic,
                                                     std::size_t histogram_bins = 20);

struct BandShares {
  std::string band;
  double n_original = 0.0;
  double n_synthetic = 0.0;
  /// Percent of the band's rows at each outcome level.
  std::vector<double> pct_original;
  std::vector<double> pct_synthetic;
};

struct BivariateComparison {
  std::string band_variable;
  std::string outcome_variable;
  std::vector<std::string> outcome_levels;
  std::vector<BandShares> bands;
  /// Largest |pct_original - pct_synthetic| over bands and levels, in points.
  double max_abs_difference = 0.0;

  /// Percentages of one outcome level per band (original, synthetic).
  std::vector<std::pair<double, double>> level_percentages(const std::string& level) const;
};

/// Distribution of a categorical outcome within bands of another variable,
/// e.g. percent married by age band. A numeric band variable is cut at
/// `cuts` (bands (-inf, c1), [c1, c2), ..., [cm, inf)); without cuts the
/// quintiles of the original are used. A categorical band variable gives one
/// band per level.
BivariateComparison compare_bivariate(const Dataset& original, const Dataset& synthetic,
                                      const std::string& band_variable, const std::string& outcome_variable,
                                      std::span<const double> cuts = {});

}  // namespace synthweave
