#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "synthweave/dataset.hpp"
#include "synthweave/kernels.hpp"
#include "synthweave/models.hpp"
#include "synthweave/plan.hpp"

namespace synthweave {

struct VariableReport {
  std::string variable;
  std::string method;
  std::vector<std::string> predictors;
  /// Original rows used for the fit (rule rows excluded).
  std::size_t n_fit = 0;
  /// Original rows left out of the fit because a rule covers them.
  std::size_t rule_rows_original = 0;
  /// Synthetic rows that received a forced value.
  std::size_t rule_rows_synthetic = 0;
  /// Method used for the missing-value indicator, empty when there was none.
  std::string missing_indicator_method;
  std::size_t synthetic_missing = 0;
  double fit_seconds = 0.0;
  double sample_seconds = 0.0;
  FitSummary summary;
  std::vector<std::string> warnings;
};

struct StratumReport {
  std::string label;
  /// Stratifier levels pooled into this stratum.
  std::vector<std::string> levels;
  std::size_t rows = 0;
  std::uint64_t stream = 0;
  std::vector<VariableReport> variables;
};

struct SynthesisRun {
  SynthesisPlan plan;
  Dataset synthetic;
  /// Per-variable reports (unstratified runs).
  std::vector<VariableReport> variables;
  /// Per-stratum reports (stratified runs).
  std::vector<StratumReport> strata;
  std::vector<PlanDiagnostic> diagnostics;
  std::vector<std::string> warnings;
  double elapsed_seconds = 0.0;
};

struct SynthesisOptions {
  Execution exec = Execution::parallel;
  /// Stream index used when the plan has no stratifier. Stratum s of a
  /// stratified run uses stream s, so a subset synthesized with
  /// stream = s reproduces that stratum exactly.
  std::uint64_t stream = 0;
};

/// Sequential synthesis: each visited variable is fitted on the original
/// data and sampled from the synthetic values of its predictors. Rules are
/// applied after sampling. With a stratifier, each stratum is synthesized
/// independently (in parallel) and the stratifier is copied verbatim.
/// Throws PlanError when validate_plan reports errors.
SynthesisRun synthesize(const Dataset& original, const SynthesisPlan& plan, const SynthesisOptions& options = {});

struct ReorderResult {
  SynthesisPlan plan;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kVisitEnd = std::numeric_limits<std::size_t>::max();

/// Moves `column` to `position` (0 = start, kVisitEnd or any index past the
/// end = end). An explicit predictor row of the moved column is dropped so it
/// defaults to all preceding variables; other rows lose predictors that no
/// longer precede them. A new first variable is coerced to Sample.
ReorderResult reorder_visit(const SynthesisPlan& plan, const std::string& column, std::size_t position);

}  // namespace synthweave
