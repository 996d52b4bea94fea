#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synthweave/csv.hpp"
#include "synthweave/dataset.hpp"

namespace synthweave {

/// Parameters of the simulated household census.
struct ToyCensusSpec {
  std::size_t n_rows = 10000;
  std::uint64_t seed = 1;
  /// Share of women.
  double female_share = 0.51;
  /// Age weights decay like exp(-age / age_scale) over 0..99.
  double age_scale = 32.0;
  /// Probability of being married by age (piecewise linear between knots, 0 below 16).
  std::vector<std::pair<double, double>> married_knots = {
      {16, 0.0},   {20, 0.002}, {22, 0.006}, {25, 0.05}, {27, 0.3},  {30, 0.55}, {40, 0.72},
      {50, 0.72},  {60, 0.64},  {70, 0.49},  {80, 0.29}, {90, 0.15}, {99, 0.1}};
  /// Probability of being widowed by age.
  std::vector<std::pair<double, double>> widowed_knots = {
      {16, 0.0}, {30, 0.01}, {40, 0.03}, {50, 0.07}, {60, 0.15}, {70, 0.3}, {80, 0.5}, {90, 0.7}, {99, 0.8}};
  std::vector<std::string> regions = {"North", "Midlands", "East", "London", "SouthEast", "SouthWest"};
  std::vector<double> region_weights = {0.22, 0.19, 0.15, 0.16, 0.16, 0.12};
  /// Share of persons-per-room values set missing (exact count, rounded).
  double pperroom_missing = 0.011;
};

struct ToyCensus {
  Dataset data;
  Schema schema;
  /// Description of the generating model.
  nlohmann::json model;
};

/// Deterministic synthetic census with region, sex, age, mar, relat, occ,
/// occ_fine (nested in occ), servants, employ and pperroom. Nobody under 16
/// is married, and employ is missing exactly when occ is "None".
ToyCensus generate_toy_census(const ToyCensusSpec& spec);

/// Piecewise-linear interpolation through (x, y) knots, flat outside.
double interpolate_knots(const std::vector<std::pair<double, double>>& knots, double x);

}  // namespace synthweave
