#include "synthweave/engine.hpp"

#include <algorithm>
#include <chrono>
#include <exception>
#include <map>
#include <set>

#include "synthweave/rng.hpp"

namespace synthweave {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::size_t> rows_where(std::span<const std::uint8_t> mask, bool value) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if ((mask[i] != 0) == value) out.push_back(i);
  }
  return out;
}

std::vector<std::uint8_t> rule_mask(const std::vector<Condition>& conditions, const Dataset& data) {
  std::vector<std::uint8_t> mask(data.n_rows(), 0);
  for (const auto& c : conditions) {
    const auto m = c.evaluate(data);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] |= m[i];
  }
  return mask;
}

void force_value(Column& col, std::size_t row, const Literal& value) {
  if (col.is_numeric()) {
    col.set_number(row, std::get<double>(value));
    return;
  }
  const auto code = col.find_level(literal_text(value));
  if (!code) throw PlanError("forced value '" + literal_text(value) + "' is not a level of '" + col.name() + "'");
  col.set_code(row, *code);
}

// Categorical target whose missing cells become an ordinary extra level.
Column missing_as_level(const Column& col, std::int32_t& missing_code) {
  std::vector<std::string> levels = col.levels();
  std::string name = "NA";
  while (col.find_level(name)) name = "<" + name + ">";
  missing_code = static_cast<std::int32_t>(levels.size());
  levels.push_back(name);
  std::vector<std::int32_t> codes(col.size());
  for (std::size_t i = 0; i < col.size(); ++i) codes[i] = col.missing(i) ? missing_code : col.code(i);
  return Column::categorical(col.name(), std::move(levels), std::move(codes));
}

Column observed_indicator(const Column& col) {
  std::vector<std::int32_t> codes(col.size());
  for (std::size_t i = 0; i < col.size(); ++i) codes[i] = col.missing(i) ? 1 : 0;
  return Column::categorical(col.name() + ".missing", {"observed", "missing"}, std::move(codes));
}

bool single_value(const Column& col) {
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col.missing(i)) continue;
    if (!first) {
      first = i;
    } else if (col.is_categorical() ? col.code(i) != col.code(*first) : col.number(i) != col.number(*first)) {
      return false;
    }
  }
  return true;
}

MethodSpec indicator_method(const MethodSpec& m) {
  if (std::holds_alternative<SampleMethod>(m)) return SampleMethod{};
  if (is_parametric(m)) return LogitMethod{};
  if (auto* c = std::get_if<CartMethod>(&m)) return *c;
  return CartMethod{};
}

// Synthesizes every visited variable for one block of rows (the whole data
// set or one stratum). `plan` has no stratifier here; a stratum passes its
// stratifier values as `fixed` so nested variables can group on them.
struct BlockResult {
  Dataset synthetic;
  std::vector<VariableReport> variables;
};

BlockResult synthesize_block(const Dataset& original, const SynthesisPlan& plan, std::size_t n_syn,
                             std::uint64_t stream, Execution exec, const Column* fixed = nullptr) {
  BlockResult out;
  out.synthetic = Dataset(n_syn);
  if (fixed) out.synthetic.add_column(*fixed);
  std::map<std::string, std::vector<Condition>> rules;
  std::map<std::string, std::vector<const Rule*>> rule_refs;
  for (const auto& r : plan.rules) {
    rules[r.target].push_back(Condition::parse(r.condition));
    rule_refs[r.target].push_back(&r);
  }

  for (const auto& var : plan.visit_sequence) {
    VariableReport rep;
    rep.variable = var;
    const auto t0 = Clock::now();
    Rng rng(substream_seed(plan.seed, stream, hash_name(var)));
    const Column& target_all = original.column(var);
    MethodSpec method = plan.method_for(var);
    std::vector<std::string> pred_names = plan.predictors_for(var);
    if (auto* nested = std::get_if<NestedMethod>(&method)) {
      if (std::find(pred_names.begin(), pred_names.end(), nested->group_column) == pred_names.end()) {
        pred_names = {nested->group_column};
      }
    }

    // Rule rows: excluded from the fit, forced in the output.
    std::vector<std::uint8_t> orig_rule(original.n_rows(), 0);
    std::vector<std::uint8_t> syn_rule(n_syn, 0);
    if (auto it = rules.find(var); it != rules.end()) {
      orig_rule = rule_mask(it->second, original);
      syn_rule = rule_mask(it->second, out.synthetic);
    }
    const auto fit_rows = rows_where(orig_rule, false);
    const auto draw_rows = rows_where(syn_rule, false);
    rep.rule_rows_original = original.n_rows() - fit_rows.size();
    rep.rule_rows_synthetic = n_syn - draw_rows.size();

    const Dataset fit_data = original.subset_rows(fit_rows);
    Column target = fit_data.column(var);
    const Dataset fit_pred = fit_data.select(pred_names);
    const Dataset draw_pred = out.synthetic.subset_rows(draw_rows).select(pred_names);
    rep.predictors = pred_names;
    rep.n_fit = fit_rows.size();

    Column drawn = Column::empty_like(target_all, draw_rows.size());
    if (!draw_rows.empty()) {
      if (fit_rows.empty()) {
        throw FitError("'" + var + "': every original row is covered by a rule, nothing left to fit");
      }
      if (target.size() == target.missing_count()) {
        method = SampleMethod{};
        rep.summary.method = "sample";
        rep.summary.warnings.push_back("all values missing in the fitting data; synthesized as missing");
      } else if (target.is_categorical() && target.has_missing()) {
        std::int32_t na_code = 0;
        Column coded = missing_as_level(target, na_code);
        if (single_value(coded)) method = SampleMethod{};
        if (std::holds_alternative<LogitMethod>(method)) {
          // The missing level makes the target multi-level.
          std::set<std::int32_t> present(coded.codes().begin(), coded.codes().end());
          if (present.size() > 2) method = MultinomialMethod{};
        }
        auto model = fit_conditional(method, coded, fit_pred, exec);
        rep.summary = model->summary();
        const auto t1 = Clock::now();
        rep.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
        Column s = model->sample(draw_pred, rng);
        for (std::size_t r = 0; r < s.size(); ++r) {
          if (s.code(r) == na_code) {
            drawn.set_missing(r);
          } else {
            drawn.set_code(r, s.code(r));
          }
        }
        rep.sample_seconds = seconds_since(t1);
      } else if (target.is_numeric() && target.has_missing()) {
        const MethodSpec ind_method = indicator_method(method);
        rep.missing_indicator_method = method_name(ind_method);
        auto ind_model = fit_conditional(ind_method, observed_indicator(target), fit_pred, exec);
        std::vector<std::size_t> observed_rows;
        for (std::size_t i = 0; i < target.size(); ++i) {
          if (!target.missing(i)) observed_rows.push_back(i);
        }
        const Column obs_target = target.subset(observed_rows);
        if (single_value(obs_target)) method = SampleMethod{};
        auto model = fit_conditional(method, obs_target, fit_pred.subset_rows(observed_rows), exec);
        rep.summary = model->summary();
        for (const auto& w : ind_model->summary().warnings) rep.summary.warnings.push_back(w);
        const auto t1 = Clock::now();
        rep.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
        const Column ind = ind_model->sample(draw_pred, rng);
        std::vector<std::size_t> present_rows;
        for (std::size_t r = 0; r < ind.size(); ++r) {
          if (ind.code(r) == 0) present_rows.push_back(r);
        }
        const Column values = model->sample(draw_pred.subset_rows(present_rows), rng);
        for (std::size_t k = 0; k < present_rows.size(); ++k) drawn.set_number(present_rows[k], values.number(k));
        rep.sample_seconds = seconds_since(t1);
      } else {
        if (single_value(target)) method = SampleMethod{};
        auto model = fit_conditional(method, target, fit_pred, exec);
        rep.summary = model->summary();
        const auto t1 = Clock::now();
        rep.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
        drawn = model->sample(draw_pred, rng);
        rep.sample_seconds = seconds_since(t1);
      }
    }
    rep.method = method_name(method);
    if (rep.summary.method.empty()) rep.summary.method = rep.method;
    for (const auto& w : rep.summary.warnings) rep.warnings.push_back(w);

    Column full = Column::empty_like(target_all, n_syn);
    for (std::size_t k = 0; k < draw_rows.size(); ++k) {
      const std::size_t r = draw_rows[k];
      if (drawn.missing(k)) continue;
      if (full.is_categorical()) {
        full.set_code(r, drawn.code(k));
      } else {
        full.set_number(r, drawn.number(k));
      }
    }
    if (rep.rule_rows_synthetic > 0) {
      const auto& conds = rules.at(var);
      const auto& refs = rule_refs.at(var);
      // Earlier rules win when several cover a row.
      std::vector<std::uint8_t> done(n_syn, 0);
      for (std::size_t k = 0; k < conds.size(); ++k) {
        const auto m = conds[k].evaluate(out.synthetic);
        for (std::size_t r = 0; r < n_syn; ++r) {
          if (m[r] && !done[r]) {
            force_value(full, r, refs[k]->value);
            done[r] = 1;
          }
        }
      }
    }
    rep.synthetic_missing = full.missing_count();
    out.synthetic.add_column(std::move(full));
    out.variables.push_back(std::move(rep));
  }
  if (fixed) out.synthetic = out.synthetic.select(plan.visit_sequence);
  return out;
}

Dataset in_original_order(const Dataset& original, const Dataset& block, const std::optional<Column>& stratifier) {
  Dataset out(block.n_rows());
  for (const auto& col : original.columns()) {
    if (block.has(col.name())) {
      out.add_column(block.column(col.name()));
    } else if (stratifier && stratifier->name() == col.name()) {
      out.add_column(*stratifier);
    }
  }
  return out;
}

}  // namespace

SynthesisRun synthesize(const Dataset& original, const SynthesisPlan& plan, const SynthesisOptions& options) {
  if (original.n_rows() == 0) throw DataError("empty dataset");
  const auto start = Clock::now();
  SynthesisRun run;
  run.plan = plan;
  run.diagnostics = validate_plan(plan, original);
  if (has_errors(run.diagnostics)) {
    std::string msg = "invalid synthesis plan";
    for (const auto& d : run.diagnostics) {
      if (d.severity == Severity::error) {
        msg += ": " + d.message;
        break;
      }
    }
    throw PlanError(msg, run.diagnostics);
  }
  for (const auto& d : run.diagnostics) run.warnings.push_back(d.code + ": " + d.message);

  if (!plan.stratifier) {
    const std::size_t n_syn = plan.options.n_synthetic.value_or(original.n_rows());
    BlockResult block = synthesize_block(original, plan, n_syn, options.stream, options.exec);
    run.synthetic = in_original_order(original, block.synthetic, std::nullopt);
    run.variables = std::move(block.variables);
    for (const auto& v : run.variables) {
      for (const auto& w : v.warnings) run.warnings.push_back(v.variable + ": " + w);
    }
    run.synthetic.set_name(original.name());
    run.elapsed_seconds = seconds_since(start);
    return run;
  }

  const Column& strat = original.column(*plan.stratifier);
  const std::size_t n_levels = strat.level_count();
  std::vector<std::vector<std::size_t>> by_level(n_levels);
  for (std::size_t i = 0; i < original.n_rows(); ++i) by_level[static_cast<std::size_t>(strat.code(i))].push_back(i);

  struct Stratum {
    std::string label;
    std::vector<std::string> levels;
    std::vector<std::size_t> rows;
  };
  std::vector<Stratum> strata;
  Stratum pooled{"other", {}, {}};
  for (std::size_t l = 0; l < n_levels; ++l) {
    if (by_level[l].empty()) continue;
    if (by_level[l].size() < plan.options.min_stratum_rows) {
      pooled.levels.push_back(strat.levels()[l]);
      pooled.rows.insert(pooled.rows.end(), by_level[l].begin(), by_level[l].end());
    } else {
      strata.push_back({strat.levels()[l], {strat.levels()[l]}, by_level[l]});
    }
  }
  if (!pooled.levels.empty()) {
    std::sort(pooled.rows.begin(), pooled.rows.end());
    std::string list;
    for (const auto& l : pooled.levels) list += (list.empty() ? "" : ", ") + l;
    run.warnings.push_back("strata with fewer than " + std::to_string(plan.options.min_stratum_rows) +
                           " rows pooled into 'other': " + list);
    strata.push_back(std::move(pooled));
  }

  SynthesisPlan inner = plan;
  inner.stratifier.reset();
  std::vector<BlockResult> results(strata.size());
  std::vector<std::exception_ptr> errors(strata.size());
  const auto n_strata = static_cast<std::int64_t>(strata.size());
  const bool par = options.exec == Execution::parallel && n_strata > 1;
#pragma omp parallel for schedule(dynamic, 1) if (par)
  for (std::int64_t s = 0; s < n_strata; ++s) {
    const auto k = static_cast<std::size_t>(s);
    try {
      const Dataset part = original.subset_rows(strata[k].rows);
      const Column& fixed = part.column(*plan.stratifier);
      results[k] = synthesize_block(part, inner, part.n_rows(), k, options.exec, &fixed);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (std::size_t k = 0; k < strata.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const Error& e) {
      throw FitError("stratum '" + strata[k].label + "': " + e.what());
    }
  }

  // Scatter each stratum back to its original row positions.
  Dataset assembled(original.n_rows());
  for (const auto& var : plan.visit_sequence) {
    Column col = Column::empty_like(original.column(var), original.n_rows());
    for (std::size_t k = 0; k < strata.size(); ++k) {
      const Column& part = results[k].synthetic.column(var);
      for (std::size_t j = 0; j < strata[k].rows.size(); ++j) {
        const std::size_t r = strata[k].rows[j];
        if (part.missing(j)) continue;
        if (col.is_categorical()) {
          col.set_code(r, part.code(j));
        } else {
          col.set_number(r, part.number(j));
        }
      }
    }
    assembled.add_column(std::move(col));
  }
  run.synthetic = in_original_order(original, assembled, strat);
  run.synthetic.set_name(original.name());
  for (std::size_t k = 0; k < strata.size(); ++k) {
    StratumReport sr;
    sr.label = strata[k].label;
    sr.levels = strata[k].levels;
    sr.rows = strata[k].rows.size();
    sr.stream = k;
    sr.variables = std::move(results[k].variables);
    for (const auto& v : sr.variables) {
      for (const auto& w : v.warnings) run.warnings.push_back("stratum " + sr.label + ", " + v.variable + ": " + w);
    }
    run.strata.push_back(std::move(sr));
  }
  run.elapsed_seconds = seconds_since(start);
  return run;
}

ReorderResult reorder_visit(const SynthesisPlan& plan, const std::string& column, std::size_t position) {
  ReorderResult res{plan, {}};
  auto current = plan.position_of(column);
  if (!current) throw PlanError("'" + column + "' is not in the visit sequence");
  auto& visit = res.plan.visit_sequence;
  const std::size_t target = std::min(position, visit.size() - 1);
  if (target == *current) return res;

  const std::string old_first = visit.front();
  visit.erase(visit.begin() + static_cast<std::ptrdiff_t>(*current));
  visit.insert(visit.begin() + static_cast<std::ptrdiff_t>(target), column);

  res.plan.predictor_matrix.erase(column);
  for (auto& [t, preds] : res.plan.predictor_matrix) {
    const auto tp = *res.plan.position_of(t);
    std::vector<std::string> kept;
    for (const auto& p : preds) {
      auto pp = res.plan.position_of(p);
      if (pp && *pp < tp) {
        kept.push_back(p);
      } else {
        res.warnings.push_back("dropped predictor '" + p + "' of '" + t + "', which no longer precedes it");
      }
    }
    preds = std::move(kept);
  }

  const std::string& first = visit.front();
  if (first != old_first) {
    const MethodSpec m = plan.method_for(first);
    if (!std::holds_alternative<SampleMethod>(m)) {
      res.warnings.push_back("'" + first + "' is now synthesized first; method '" + method_name(m) +
                             "' replaced by sample");
    }
    res.plan.methods[first] = SampleMethod{};
    res.plan.predictor_matrix.erase(first);
    res.plan.nesting.erase(first);
  }

  for (const auto& rule : res.plan.rules) {
    const auto tp = res.plan.position_of(rule.target);
    try {
      for (const auto& c : Condition::parse(rule.condition).referenced_columns()) {
        auto cp = res.plan.position_of(c);
        if (tp && cp && *cp >= *tp) {
          res.warnings.push_back("rule on '" + rule.target + "' refers to '" + c + "', which no longer precedes it");
        }
      }
    } catch (const PlanError&) {
    }
  }
  for (const auto& [t, g] : res.plan.nesting) {
    auto tp = res.plan.position_of(t);
    auto gp = res.plan.position_of(g);
    if (tp && gp && *gp >= *tp) {
      res.warnings.push_back("nesting group '" + g + "' no longer precedes '" + t + "'");
    }
  }
  return res;
}

}  // namespace synthweave
