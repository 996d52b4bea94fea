#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "synthweave/plan.hpp"

namespace synthweave {

std::string method_name(const MethodSpec& method) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SampleMethod>) return "sample";
        if constexpr (std::is_same_v<T, CartMethod>) return "cart";
        if constexpr (std::is_same_v<T, NormRankMethod>) return "normrank";
        if constexpr (std::is_same_v<T, TransformNormalMethod>) {
          switch (m.transform) {
            case Transform::sqrt: return "sqrt_normal";
            case Transform::cuberoot: return "cuberoot_normal";
            default: return "normal";
          }
        }
        if constexpr (std::is_same_v<T, LogitMethod>) return "logit";
        if constexpr (std::is_same_v<T, MultinomialMethod>) return "multinomial";
        if constexpr (std::is_same_v<T, NestedMethod>) return "nested";
      },
      method);
}

bool is_parametric(const MethodSpec& method) {
  return std::holds_alternative<NormRankMethod>(method) || std::holds_alternative<TransformNormalMethod>(method) ||
         std::holds_alternative<LogitMethod>(method) || std::holds_alternative<MultinomialMethod>(method);
}

std::optional<std::string> method_parameter_error(const MethodSpec& method) {
  if (auto* c = std::get_if<CartMethod>(&method)) {
    if (c->min_bucket < 1) return "min_bucket must be >= 1";
    if (!(c->complexity >= 0.0)) return "complexity must be >= 0";
  } else if (auto* l = std::get_if<LogitMethod>(&method)) {
    if (l->max_iter < 1) return "max_iter must be >= 1";
    if (!(l->tol > 0.0)) return "tol must be > 0";
  } else if (auto* m = std::get_if<MultinomialMethod>(&method)) {
    if (m->max_iter < 1) return "max_iter must be >= 1";
    if (!(m->tol > 0.0)) return "tol must be > 0";
  } else if (auto* n = std::get_if<NormRankMethod>(&method)) {
    if (!(n->residual_scale >= 0.0)) return "residual_scale must be >= 0";
  } else if (auto* g = std::get_if<NestedMethod>(&method)) {
    if (g->group_column.empty()) return "nested method needs a group column";
  }
  return std::nullopt;
}

std::string literal_text(const Literal& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, std::get<double>(value));
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Condition parsing

namespace {

class ConditionLexer {
 public:
  explicit ConditionLexer(const std::string& text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool done() {
    skip_space();
    return pos_ >= text_.size();
  }

  std::string identifier() {
    skip_space();
    if (pos_ < text_.size() && (text_[pos_] == '`' || text_[pos_] == '"')) return quoted();
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_word_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected a column name");
    return text_.substr(start, pos_ - start);
  }

  CompareOp op() {
    skip_space();
    auto starts = [&](std::string_view s) { return text_.compare(pos_, s.size(), s) == 0; };
    for (auto [tok, op] : {std::pair{"==", CompareOp::eq}, {"!=", CompareOp::ne}, {"<=", CompareOp::le},
                           {">=", CompareOp::ge}, {"<", CompareOp::lt}, {">", CompareOp::gt},
                           {"=", CompareOp::eq}}) {
      if (starts(tok)) {
        pos_ += std::string_view(tok).size();
        return op;
      }
    }
    fail("expected a comparison operator");
  }

  Literal literal() {
    skip_space();
    if (pos_ >= text_.size()) fail("expected a value");
    char c = text_[pos_];
    if (c == '\'' || c == '"') return quoted();
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_word_char(text_[pos_])) ++pos_;
    if (start == pos_) fail("expected a value");
    std::string word = text_.substr(start, pos_ - start);
    double v = 0.0;
    auto res = std::from_chars(word.data(), word.data() + word.size(), v);
    if (res.ec == std::errc{} && res.ptr == word.data() + word.size()) return v;
    return word;
  }

  bool conjunction() {
    skip_space();
    if (text_.compare(pos_, 2, "&&") == 0) {
      pos_ += 2;
      return true;
    }
    if (pos_ < text_.size() && text_[pos_] == '&') {
      ++pos_;
      return true;
    }
    if (text_.compare(pos_, 3, "and") == 0 && (pos_ + 3 >= text_.size() || !is_word_char(text_[pos_ + 3]))) {
      pos_ += 3;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw PlanError("malformed condition '" + text_ + "': " + what + " at offset " + std::to_string(pos_));
  }

 private:
  static bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' || c == '+';
  }

  std::string quoted() {
    char q = text_[pos_++];
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != q) ++pos_;
    if (pos_ >= text_.size()) fail("unterminated quote");
    std::string out = text_.substr(start, pos_ - start);
    ++pos_;
    return out;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

bool compare_values(double lhs, CompareOp op, double rhs) {
  switch (op) {
    case CompareOp::eq: return lhs == rhs;
    case CompareOp::ne: return lhs != rhs;
    case CompareOp::lt: return lhs < rhs;
    case CompareOp::le: return lhs <= rhs;
    case CompareOp::gt: return lhs > rhs;
    case CompareOp::ge: return lhs >= rhs;
  }
  return false;
}

bool is_ordering(CompareOp op) { return op != CompareOp::eq && op != CompareOp::ne; }

}  // namespace

Condition Condition::parse(const std::string& text) {
  ConditionLexer lex(text);
  Condition cond;
  if (lex.done()) lex.fail("empty condition");
  do {
    Comparison cmp;
    cmp.column = lex.identifier();
    cmp.op = lex.op();
    cmp.value = lex.literal();
    cond.terms.push_back(std::move(cmp));
  } while (lex.conjunction());
  if (!lex.done()) lex.fail("unexpected trailing text");
  return cond;
}

std::vector<std::string> Condition::referenced_columns() const {
  std::vector<std::string> out;
  for (const auto& t : terms) {
    if (std::find(out.begin(), out.end(), t.column) == out.end()) out.push_back(t.column);
  }
  return out;
}

std::vector<std::uint8_t> Condition::evaluate(const Dataset& data) const {
  std::vector<std::uint8_t> mask(data.n_rows(), 1);
  for (const auto& t : terms) {
    const Column& col = data.column(t.column);
    if (col.is_numeric()) {
      const auto* rhs = std::get_if<double>(&t.value);
      if (!rhs) throw DataError("condition compares numeric column '" + t.column + "' with text");
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) mask[i] = !col.missing(i) && compare_values(col.number(i), t.op, *rhs);
      }
    } else {
      if (is_ordering(t.op)) {
        throw DataError("ordering comparison on categorical column '" + t.column + "'");
      }
      // A level absent from the table matches nothing under ==.
      auto code = col.find_level(literal_text(t.value));
      const bool want_equal = t.op == CompareOp::eq;
      for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        if (col.missing(i)) {
          mask[i] = 0;
          continue;
        }
        const bool equal = code && col.code(i) == *code;
        mask[i] = equal == want_equal;
      }
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Plan helpers

std::optional<std::size_t> SynthesisPlan::position_of(const std::string& column) const {
  auto it = std::find(visit_sequence.begin(), visit_sequence.end(), column);
  if (it == visit_sequence.end()) return std::nullopt;
  return static_cast<std::size_t>(it - visit_sequence.begin());
}

MethodSpec SynthesisPlan::method_for(const std::string& column) const {
  if (auto it = methods.find(column); it != methods.end()) return it->second;
  if (auto it = nesting.find(column); it != nesting.end()) return NestedMethod{it->second};
  if (!visit_sequence.empty() && visit_sequence.front() == column) return SampleMethod{};
  return CartMethod{};
}

std::vector<std::string> SynthesisPlan::predictors_for(const std::string& column) const {
  if (auto it = predictor_matrix.find(column); it != predictor_matrix.end()) return it->second;
  std::vector<std::string> out;
  for (const auto& v : visit_sequence) {
    if (v == column) break;
    out.push_back(v);
  }
  return out;
}

SynthesisPlan default_plan(const Dataset& data, const MethodSpec& method, std::uint64_t seed) {
  SynthesisPlan plan;
  plan.visit_sequence = data.names();
  plan.seed = seed;
  for (std::size_t i = 0; i < plan.visit_sequence.size(); ++i) {
    plan.methods[plan.visit_sequence[i]] = i == 0 ? MethodSpec{SampleMethod{}} : method;
  }
  return plan;
}

bool has_errors(const std::vector<PlanDiagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const PlanDiagnostic& d) { return d.severity == Severity::error; });
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class DiagnosticSink {
 public:
  void error(std::string code, std::string message, std::vector<std::string> subjects = {},
             std::optional<std::size_t> rule = std::nullopt) {
    out.push_back({Severity::error, std::move(code), std::move(message), std::move(subjects), rule});
  }
  void warning(std::string code, std::string message, std::vector<std::string> subjects = {}) {
    out.push_back({Severity::warning, std::move(code), std::move(message), std::move(subjects), std::nullopt});
  }
  std::vector<PlanDiagnostic> out;
};

/// Effective category count used by the modelling code (missing becomes a level).
std::size_t effective_levels(const Column& c) { return c.level_count() + (c.has_missing() ? 1 : 0); }

void check_method_type(const SynthesisPlan& plan, const Dataset& data, const std::string& var,
                       const MethodSpec& method, DiagnosticSink& sink) {
  const Column& col = data.column(var);
  const std::string name = method_name(method);
  auto mismatch = [&](const std::string& why) {
    sink.error("method_type", "method '" + name + "' cannot synthesize '" + var + "': " + why, {var});
  };
  if (std::holds_alternative<NormRankMethod>(method) || std::holds_alternative<TransformNormalMethod>(method)) {
    if (!col.is_numeric()) mismatch("needs a numeric variable");
  } else if (std::holds_alternative<LogitMethod>(method)) {
    if (!col.is_categorical()) {
      mismatch("needs a categorical variable");
    } else if (col.level_count() != 2) {
      mismatch("needs exactly 2 levels, found " + std::to_string(col.level_count()));
    } else if (col.has_missing()) {
      mismatch("binary target has missing values; use multinomial or cart");
    }
  } else if (std::holds_alternative<MultinomialMethod>(method)) {
    if (!col.is_categorical()) {
      mismatch("needs a categorical variable");
    } else if (effective_levels(col) < 2) {
      mismatch("needs at least 2 levels");
    } else if (effective_levels(col) > plan.options.max_multinomial_levels) {
      sink.error("multinomial_too_many_levels",
                 "'" + var + "' has " + std::to_string(effective_levels(col)) +
                     " categories, above the multinomial limit of " +
                     std::to_string(plan.options.max_multinomial_levels) + "; synthesize it with the nested method",
                 {var});
    }
  } else if (const auto* nested = std::get_if<NestedMethod>(&method)) {
    if (!col.is_categorical()) mismatch("needs a categorical variable");
    const auto& g = nested->group_column;
    if (!data.has(g)) {
      sink.error("nested_group", "grouping column '" + g + "' for '" + var + "' is not in the data", {var, g});
    } else if (!data.column(g).is_categorical()) {
      sink.error("nested_group", "grouping column '" + g + "' for '" + var + "' must be categorical", {var, g});
    } else {
      auto gp = plan.position_of(g);
      auto tp = plan.position_of(var);
      const bool by_stratifier = plan.stratifier && *plan.stratifier == g;
      if (!by_stratifier && (!gp || !tp || *gp >= *tp)) {
        sink.error("nested_group", "grouping column '" + g + "' must precede '" + var + "' in the visit sequence",
                   {var, g});
      }
    }
  }
}

}  // namespace

std::vector<PlanDiagnostic> validate_plan(const SynthesisPlan& plan, const Dataset& data) {
  DiagnosticSink sink;
  const auto& visit = plan.visit_sequence;

  if (visit.empty()) sink.error("empty_visit_sequence", "visit sequence is empty");

  std::set<std::string> seen;
  for (const auto& v : visit) {
    if (!data.has(v)) sink.error("unknown_column", "visit sequence names unknown column '" + v + "'", {v});
    if (!seen.insert(v).second) sink.error("duplicate_visit", "'" + v + "' appears twice in the visit sequence", {v});
  }
  for (const auto& [var, m] : plan.methods) {
    if (!plan.position_of(var)) {
      sink.warning("method_unvisited", "method given for '" + var + "', which is not in the visit sequence", {var});
    }
    if (auto err = method_parameter_error(m)) {
      sink.error("method_parameters", "method for '" + var + "': " + *err, {var});
    }
  }
  // Every later check assumes the visit sequence names real, distinct columns.
  if (has_errors(sink.out)) return sink.out;

  // First variable: bootstrap sample, no predictors.
  const std::string& first = visit.front();
  if (!std::holds_alternative<SampleMethod>(plan.method_for(first))) {
    sink.error("first_variable_method",
               "first variable '" + first + "' must use the sample method, not '" +
                   method_name(plan.method_for(first)) + "'",
               {first});
  }
  if (auto it = plan.predictor_matrix.find(first); it != plan.predictor_matrix.end() && !it->second.empty()) {
    sink.error("first_variable_predictors", "first variable '" + first + "' cannot have predictors", {first});
  }

  // Predictor precedence.
  for (const auto& [target, predictors] : plan.predictor_matrix) {
    auto tp = plan.position_of(target);
    if (!tp) {
      sink.error("predictor_target_unvisited", "predictor row for '" + target + "', which is not synthesized",
                 {target});
      continue;
    }
    for (const auto& p : predictors) {
      if (p == target) {
        sink.error("predictor_self", "'" + target + "' cannot predict itself", {target, p});
        continue;
      }
      auto pp = plan.position_of(p);
      if (!pp || *pp > *tp) {
        sink.error("predictor_order",
                   "predictor '" + p + "' of '" + target + "' is not synthesized before it in the visit sequence",
                   {target, p});
      }
    }
  }

  // Methods vs variable types.
  for (const auto& v : visit) check_method_type(plan, data, v, plan.method_for(v), sink);

  for (const auto& [target, group] : plan.nesting) {
    if (!plan.position_of(target)) {
      sink.error("nesting_unvisited", "nesting target '" + target + "' is not in the visit sequence", {target});
      continue;
    }
    auto m = plan.method_for(target);
    const auto* nested = std::get_if<NestedMethod>(&m);
    if (!nested || nested->group_column != group) {
      sink.error("nesting_method", "nesting target '" + target + "' must use the nested method grouped by '" + group + "'",
                 {target, group});
    }
  }

  // Rules.
  for (std::size_t r = 0; r < plan.rules.size(); ++r) {
    const Rule& rule = plan.rules[r];
    auto tp = plan.position_of(rule.target);
    if (!tp) {
      sink.error("rule_target", "rule " + std::to_string(r) + " targets '" + rule.target + "', which is not synthesized",
                 {rule.target}, r);
      continue;
    }
    Condition cond;
    try {
      cond = Condition::parse(rule.condition);
    } catch (const PlanError& e) {
      sink.error("rule_condition", "rule " + std::to_string(r) + ": " + e.what(), {rule.target}, r);
      continue;
    }
    for (const auto& t : cond.terms) {
      auto cp = plan.position_of(t.column);
      if (!data.has(t.column)) {
        sink.error("rule_condition", "rule " + std::to_string(r) + " refers to unknown column '" + t.column + "'",
                   {rule.target, t.column}, r);
        continue;
      }
      const bool on_stratifier = plan.stratifier && *plan.stratifier == t.column;
      if (!on_stratifier && (!cp || *cp >= *tp)) {
        sink.error("rule_order",
                   "rule " + std::to_string(r) + ": '" + t.column + "' must be synthesized before '" + rule.target + "'",
                   {rule.target, t.column}, r);
      }
      const Column& c = data.column(t.column);
      if (c.is_numeric() && !std::holds_alternative<double>(t.value)) {
        sink.error("rule_condition", "rule " + std::to_string(r) + ": numeric column '" + t.column +
                                         "' compared with text", {rule.target, t.column}, r);
      }
      if (c.is_categorical() && is_ordering(t.op)) {
        sink.error("rule_condition", "rule " + std::to_string(r) + ": ordering comparison on categorical '" +
                                         t.column + "'", {rule.target, t.column}, r);
      }
    }
    const Column& target = data.column(rule.target);
    if (target.is_numeric() && !std::holds_alternative<double>(rule.value)) {
      sink.error("rule_value", "rule " + std::to_string(r) + ": forced value for numeric '" + rule.target +
                                   "' must be a number", {rule.target}, r);
    }
    if (target.is_categorical() && !target.find_level(literal_text(rule.value))) {
      sink.error("rule_value", "rule " + std::to_string(r) + ": '" + literal_text(rule.value) +
                                   "' is not a level of '" + rule.target + "'", {rule.target}, r);
    }
  }

  // Stratifier.
  if (plan.stratifier) {
    const std::string& s = *plan.stratifier;
    if (!data.has(s)) {
      sink.error("stratifier", "stratifier '" + s + "' is not in the data", {s});
    } else {
      const Column& c = data.column(s);
      if (!c.is_categorical()) sink.error("stratifier", "stratifier '" + s + "' must be categorical", {s});
      if (c.has_missing()) sink.error("stratifier", "stratifier '" + s + "' has missing values", {s});
      if (plan.position_of(s)) {
        sink.error("stratifier", "stratifier '" + s + "' is copied per stratum and must not be in the visit sequence",
                   {s});
      }
    }
    if (plan.options.n_synthetic && *plan.options.n_synthetic != data.n_rows()) {
      sink.error("stratifier", "stratified synthesis keeps stratum sizes; n_synthetic cannot be changed", {s});
    }
  }

  // Guideline lints.
  const std::size_t threshold = plan.options.high_cardinality_threshold;
  auto is_high_card = [&](const std::string& v) {
    const Column& c = data.column(v);
    return c.is_categorical() && effective_levels(c) > threshold;
  };
  for (std::size_t i = 0; i < visit.size(); ++i) {
    const std::string& v = visit[i];
    const MethodSpec m = plan.method_for(v);
    if (is_parametric(m)) {
      sink.warning("guideline_1", "'" + v + "' uses parametric method '" + method_name(m) +
                                      "'; a CART-based method is recommended for all variables", {v});
    }
    if (!is_high_card(v)) continue;
    const auto levels = std::to_string(effective_levels(data.column(v)));
    if (!std::holds_alternative<NestedMethod>(m)) {
      sink.warning("guideline_3", "'" + v + "' has " + levels +
                                      " categories; consider grouping it and synthesizing it nested within the grouping",
                   {v});
    }
    bool later_low = false;
    for (std::size_t j = i + 1; j < visit.size(); ++j) later_low = later_low || !is_high_card(visit[j]);
    if (later_low) {
      sink.warning("guideline_6", "'" + v + "' has " + levels +
                                      " categories: Move variables with many categories to the end", {v});
    }
  }
  return sink.out;
}

}  // namespace synthweave
