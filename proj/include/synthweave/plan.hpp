#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "synthweave/dataset.hpp"

namespace synthweave {

// ---------------------------------------------------------------------------
// Per-variable synthesis methods

/// Bootstrap sample of the observed values; ignores predictors.
struct SampleMethod {
  friend bool operator==(const SampleMethod&, const SampleMethod&) = default;
};

/// CART with leaf-donor sampling.
struct CartMethod {
  std::size_t min_bucket = 5;
  double complexity = 1e-8;
  friend bool operator==(const CartMethod&, const CartMethod&) = default;
};

/// Normal-scores regression with an empirical-quantile back-transform.
struct NormRankMethod {
  double residual_scale = 1.0;
  friend bool operator==(const NormRankMethod&, const NormRankMethod&) = default;
};

enum class Transform { identity, sqrt, cuberoot };

/// Normal linear regression on a transformed scale.
struct TransformNormalMethod {
  Transform transform = Transform::identity;
  friend bool operator==(const TransformNormalMethod&, const TransformNormalMethod&) = default;
};

struct LogitMethod {
  std::size_t max_iter = 100;
  double tol = 1e-6;
  friend bool operator==(const LogitMethod&, const LogitMethod&) = default;
};

struct MultinomialMethod {
  std::size_t max_iter = 100;
  double tol = 1e-6;
  friend bool operator==(const MultinomialMethod&, const MultinomialMethod&) = default;
};

/// Bootstrap within the already-synthesized grouping column.
struct NestedMethod {
  std::string group_column;
  friend bool operator==(const NestedMethod&, const NestedMethod&) = default;
};

using MethodSpec = std::variant<SampleMethod, CartMethod, NormRankMethod, TransformNormalMethod, LogitMethod,
                                MultinomialMethod, NestedMethod>;

std::string method_name(const MethodSpec& method);
bool is_parametric(const MethodSpec& method);
/// Checks parameter ranges (min_bucket >= 1, complexity >= 0, max_iter >= 1, tol > 0).
std::optional<std::string> method_parameter_error(const MethodSpec& method);

// ---------------------------------------------------------------------------
// Rules

enum class CompareOp { eq, ne, lt, le, gt, ge };

/// Right-hand constant of a comparison or the forced value of a rule.
using Literal = std::variant<double, std::string>;

std::string literal_text(const Literal& value);

struct Comparison {
  std::string column;
  CompareOp op = CompareOp::eq;
  Literal value;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

/// Conjunction of atomic comparisons. Grammar:
///   condition  := comparison ( ('&' | '&&' | 'and') comparison )*
///   comparison := column op literal,  op in == = != < <= > >=
///   literal    := number | bare-word | 'quoted' | "quoted"
/// A comparison against a missing cell is false.
struct Condition {
  std::vector<Comparison> terms;

  /// Throws PlanError on malformed text.
  static Condition parse(const std::string& text);

  /// Evaluates the condition on each row; a column not present in `data`
  /// raises DataError.
  std::vector<std::uint8_t> evaluate(const Dataset& data) const;
  std::vector<std::string> referenced_columns() const;
  friend bool operator==(const Condition&, const Condition&) = default;
};

/// Deterministic constraint: rows meeting `condition` get `value` for `target`.
struct Rule {
  std::string target;
  std::string condition;
  Literal value;
  friend bool operator==(const Rule&, const Rule&) = default;
};

// ---------------------------------------------------------------------------
// SDC section

struct SdcConfig {
  bool remove_replicated_uniques = false;
  /// Empty means "all synthesized columns".
  std::vector<std::string> key_variables;
  std::vector<std::string> noise_targets;
  double noise_scale = 0.0;
  std::string label;
  friend bool operator==(const SdcConfig&, const SdcConfig&) = default;
};

// ---------------------------------------------------------------------------
// Plan

struct PlanOptions {
  std::size_t min_stratum_rows = 100;
  std::size_t high_cardinality_threshold = 40;
  std::size_t max_multinomial_levels = 100;
  /// Synthetic row count; defaults to the original row count.
  std::optional<std::size_t> n_synthetic;
  friend bool operator==(const PlanOptions&, const PlanOptions&) = default;
};

struct SynthesisPlan {
  std::vector<std::string> visit_sequence;
  std::map<std::string, MethodSpec> methods;
  /// Explicit predictor rows (target -> predictors). A target without a row
  /// uses every variable preceding it in the visit sequence.
  std::map<std::string, std::vector<std::string>> predictor_matrix;
  std::vector<Rule> rules;
  std::optional<std::string> stratifier;
  /// High-cardinality column -> grouping column.
  std::map<std::string, std::string> nesting;
  std::uint64_t seed = 0;
  PlanOptions options;
  std::optional<SdcConfig> sdc;

  /// Method for a visited column: the explicit entry, else Nested for nesting
  /// targets, Sample for the first variable and default CART otherwise.
  MethodSpec method_for(const std::string& column) const;
  /// Predictors actually used for `column` (explicit row or all preceding).
  std::vector<std::string> predictors_for(const std::string& column) const;
  std::optional<std::size_t> position_of(const std::string& column) const;

  friend bool operator==(const SynthesisPlan&, const SynthesisPlan&) = default;
};

enum class Severity { error, warning };

struct PlanDiagnostic {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  /// Columns the diagnostic is about, e.g. (target, predictor).
  std::vector<std::string> subjects;
  std::optional<std::size_t> rule_index;
};

/// Every plan-vs-data consistency check plus the synthesis guideline lints.
/// Pure: identical inputs give identical diagnostics.
std::vector<PlanDiagnostic> validate_plan(const SynthesisPlan& plan, const Dataset& data);

bool has_errors(const std::vector<PlanDiagnostic>& diagnostics);

class PlanError : public Error {
 public:
  explicit PlanError(const std::string& message, std::vector<PlanDiagnostic> diagnostics = {})
      : Error(message), diagnostics_(std::move(diagnostics)) {}
  const std::vector<PlanDiagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<PlanDiagnostic> diagnostics_;
};

/// Minimal plan: visit every column of `data` in order, first by Sample and
/// the rest with `method`.
SynthesisPlan default_plan(const Dataset& data, const MethodSpec& method = CartMethod{}, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// JSON

MethodSpec method_from_json(const nlohmann::json& j);
nlohmann::json method_to_json(const MethodSpec& method);
/// Parses a method shorthand such as "cart", "normrank", "sqrt", "nested:occ".
MethodSpec parse_method_shorthand(const std::string& text);

SynthesisPlan plan_from_json(const nlohmann::json& doc);
nlohmann::json plan_to_json(const SynthesisPlan& plan);
SynthesisPlan load_plan(const std::string& path);

}  // namespace synthweave
