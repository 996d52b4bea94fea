#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthweave/compare.hpp"
#include "synthweave/engine.hpp"
#include "synthweave/sdc.hpp"
#include "synthweave/utility.hpp"

namespace synthweave {

struct TableReport {
  std::vector<std::string> variables;
  UtilityStat stat;
  std::vector<CellContribution> worst_cells;
};

struct UtilityReport {
  std::optional<PropensityFit> propensity;
  std::optional<UtilityStat> u_gen;
  std::optional<Diagnosis> diagnosis;
  std::vector<TableReport> tables;
  std::vector<std::string> flags;
};

struct UtilityRequest {
  /// Tables to evaluate, each a list of variables.
  std::vector<std::vector<std::string>> tables;
  PropensityModel model = PropensityModel::main_effects;
  /// Variables of the saturated model (defaults to every table variable).
  std::vector<std::string> saturated_variables;
  bool propensity = true;
  double z_threshold = 1.7;
  std::size_t numeric_bins = 5;
  /// Ratios above this are flagged.
  double ratio_flag = 3.0;
};

UtilityReport build_utility_report(const Dataset& original, const Dataset& synthetic, const UtilityRequest& request);

nlohmann::json utility_stat_json(const UtilityStat& stat);
nlohmann::json utility_report_json(const UtilityReport& report);
nlohmann::json diagnostics_json(const std::vector<PlanDiagnostic>& diagnostics);
nlohmann::json run_report_json(const SynthesisRun& run, const SdcReport* sdc = nullptr);
nlohmann::json compare_report_json(const std::vector<UnivariateComparison>& univariate,
                                   const std::vector<BivariateComparison>& bivariate);

/// Plain-text renderings for terminals.
std::string utility_report_text(const UtilityReport& report);
std::string compare_report_text(const std::vector<UnivariateComparison>& univariate,
                                const std::vector<BivariateComparison>& bivariate);
std::string run_report_text(const SynthesisRun& run, const SdcReport* sdc = nullptr);

}  // namespace synthweave
