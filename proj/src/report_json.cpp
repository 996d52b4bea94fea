#include "synthweave/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace synthweave {

namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json variable_json(const VariableReport& v) {
  json values = json::object();
  for (const auto& [k, x] : v.summary.values) values[k] = number_or_null(x);
  json j = {{"variable", v.variable},
            {"method", v.method},
            {"predictors", v.predictors},
            {"n_fit", v.n_fit},
            {"rule_rows_original", v.rule_rows_original},
            {"rule_rows_synthetic", v.rule_rows_synthetic},
            {"synthetic_missing", v.synthetic_missing},
            {"fit_seconds", v.fit_seconds},
            {"sample_seconds", v.sample_seconds},
            {"fit", values},
            {"warnings", v.warnings}};
  if (!v.missing_indicator_method.empty()) j["missing_indicator_method"] = v.missing_indicator_method;
  return j;
}

std::string table_name(const std::vector<std::string>& vars) { return join(vars, "*"); }

}  // namespace

UtilityReport build_utility_report(const Dataset& original, const Dataset& synthetic, const UtilityRequest& request) {
  UtilityReport rep;
  if (request.propensity) {
    std::vector<std::string> vars;
    if (request.model == PropensityModel::table_saturated) {
      vars = request.saturated_variables;
      if (vars.empty()) {
        for (const auto& t : request.tables) {
          for (const auto& v : t) {
            if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
          }
        }
      }
      if (vars.empty()) throw DataError("the saturated model needs variables (give --tables)");
    }
    rep.propensity = fit_propensity(original, synthetic, request.model, vars, request.numeric_bins);
    rep.u_gen = u_gen(*rep.propensity);
    rep.diagnosis = diagnose(*rep.propensity, request.z_threshold);
    for (const auto& w : rep.propensity->warnings) rep.flags.push_back("propensity: " + w);
    if (rep.u_gen->ratio > request.ratio_flag) {
      rep.flags.push_back("U_gen ratio " + fixed(rep.u_gen->ratio) + " exceeds " + fixed(request.ratio_flag, 1));
    }
    for (const auto& v : rep.diagnosis->variables) {
      rep.flags.push_back("propensity terms of '" + v.variable + "' with |z| >= " + fixed(request.z_threshold, 2) +
                          ": " + std::to_string(v.terms.size()) + " (max " + fixed(v.max_abs_z) + ")");
    }
  }
  for (const auto& vars : request.tables) {
    const CellTable table = cross_tabulate(original, synthetic, vars, request.numeric_bins);
    TableReport t;
    t.variables = vars;
    t.stat = u_tab(table);
    t.worst_cells = worst_cells(table, 10);
    if (t.stat.ratio > request.ratio_flag) {
      rep.flags.push_back("table " + table_name(vars) + ": U_tab ratio " + fixed(t.stat.ratio) + " exceeds " +
                          fixed(request.ratio_flag, 1));
    }
    rep.tables.push_back(std::move(t));
  }
  return rep;
}

json utility_stat_json(const UtilityStat& stat) {
  return {{"statistic", stat.statistic},
          {"df", stat.df},
          {"ratio", stat.ratio},
          {"p", stat.p_value ? json(*stat.p_value) : json(nullptr)}};
}

json utility_report_json(const UtilityReport& report) {
  json out = json::object();
  if (report.u_gen && report.propensity) {
    const auto& p = *report.propensity;
    json u = utility_stat_json(*report.u_gen);
    u["model"] = p.model == PropensityModel::main_effects ? "main" : "saturated";
    u["pmse"] = p.pmse;
    u["c"] = p.c;
    u["n_original"] = p.n_original;
    u["n_synthetic"] = p.n_synthetic;
    u["parameters"] = p.n_parameters;
    u["converged"] = p.converged;
    json flagged = json::array();
    if (report.diagnosis) {
      for (const auto& t : report.diagnosis->terms) {
        flagged.push_back({{"term", t.label}, {"variable", t.variable}, {"z", number_or_null(t.z)}});
      }
      json by_var = json::array();
      for (const auto& v : report.diagnosis->variables) {
        json terms = json::array();
        for (const auto& t : v.terms) terms.push_back(t.label);
        by_var.push_back({{"variable", v.variable}, {"terms", terms}, {"max_abs_z", v.max_abs_z}});
      }
      u["z_threshold"] = report.diagnosis->threshold;
      u["terms_tested"] = report.diagnosis->n_terms_tested;
      u["flagged_terms"] = flagged;
      u["flagged_variables"] = by_var;
    }
    json coefs = json::array();
    for (const auto& t : p.terms) {
      coefs.push_back({{"term", t.label},
                       {"coefficient", number_or_null(t.coefficient)},
                       {"se", number_or_null(t.se)},
                       {"z", number_or_null(t.z)}});
    }
    u["coefficients"] = coefs;
    out["u_gen"] = u;
  } else {
    out["u_gen"] = nullptr;
  }
  json tables = json::array();
  for (const auto& t : report.tables) {
    json worst = json::array();
    for (const auto& c : t.worst_cells) {
      worst.push_back({{"cell", c.levels}, {"original", c.y}, {"synthetic", c.s}, {"contribution", c.contribution}});
    }
    tables.push_back({{"variables", t.variables},
                      {"u_tab", t.stat.statistic},
                      {"df", t.stat.df},
                      {"ratio", t.stat.ratio},
                      {"p", t.stat.p_value ? json(*t.stat.p_value) : json(nullptr)},
                      {"worst_cells", worst}});
  }
  out["tables"] = tables;
  out["flags"] = report.flags;
  return out;
}

json diagnostics_json(const std::vector<PlanDiagnostic>& diagnostics) {
  json out = json::array();
  for (const auto& d : diagnostics) {
    json j = {{"severity", d.severity == Severity::error ? "error" : "warning"},
              {"code", d.code},
              {"message", d.message},
              {"subjects", d.subjects}};
    if (d.rule_index) j["rule_index"] = *d.rule_index;
    out.push_back(j);
  }
  return out;
}

json run_report_json(const SynthesisRun& run, const SdcReport* sdc) {
  json vars = json::array();
  for (const auto& v : run.variables) vars.push_back(variable_json(v));
  json strata = json::array();
  for (const auto& s : run.strata) {
    json sv = json::array();
    for (const auto& v : s.variables) sv.push_back(variable_json(v));
    strata.push_back({{"label", s.label}, {"levels", s.levels}, {"rows", s.rows}, {"stream", s.stream}, {"variables", sv}});
  }
  json out = {{"seed", run.plan.seed},
              {"rows", run.synthetic.n_rows()},
              {"columns", run.synthetic.names()},
              {"visit_sequence", run.plan.visit_sequence},
              {"stratifier", run.plan.stratifier ? json(*run.plan.stratifier) : json(nullptr)},
              {"elapsed_seconds", run.elapsed_seconds},
              {"variables", vars},
              {"strata", strata},
              {"diagnostics", diagnostics_json(run.diagnostics)},
              {"warnings", run.warnings}};
  if (sdc) {
    out["sdc"] = {{"replicated_uniques_removed", sdc->replicated_uniques_removed},
                  {"key_variables", sdc->key_variables},
                  {"noise_targets", sdc->noise_targets},
                  {"noise_scale", sdc->noise_scale},
                  {"label", sdc->label}};
  }
  return out;
}

json compare_report_json(const std::vector<UnivariateComparison>& univariate,
                         const std::vector<BivariateComparison>& bivariate) {
  json uni = json::array();
  for (const auto& u : univariate) {
    json shares = json::array();
    for (const auto& s : u.shares) shares.push_back({{"level", s.level}, {"original", s.original}, {"synthetic", s.synthetic}});
    json j = {{"variable", u.variable}, {"kind", std::string(kind_name(u.kind))}, {"shares", shares},
              {"max_abs_difference", u.max_abs_difference}};
    if (u.kind == Kind::numeric) {
      auto summary = [](const NumericSummary& s) {
        return json{{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"mean", s.mean},
                    {"q3", s.q3}, {"max", s.max}, {"missing", s.missing}};
      };
      j["breaks"] = u.breaks;
      j["original"] = summary(u.original);
      j["synthetic"] = summary(u.synthetic);
      j["range_exceeded"] = u.range_exceeded;
    }
    uni.push_back(j);
  }
  json bi = json::array();
  for (const auto& b : bivariate) {
    json bands = json::array();
    for (const auto& band : b.bands) {
      bands.push_back({{"band", band.band},
                       {"n_original", band.n_original},
                       {"n_synthetic", band.n_synthetic},
                       {"pct_original", band.pct_original},
                       {"pct_synthetic", band.pct_synthetic}});
    }
    bi.push_back({{"band_variable", b.band_variable},
                  {"outcome_variable", b.outcome_variable},
                  {"outcome_levels", b.outcome_levels},
                  {"bands", bands},
                  {"max_abs_difference", b.max_abs_difference}});
  }
  return {{"univariate", uni}, {"bivariate", bi}};
}

std::string utility_report_text(const UtilityReport& report) {
  std::ostringstream out;
  if (report.u_gen && report.propensity) {
    const auto& u = *report.u_gen;
    out << "U_gen (" << (report.propensity->model == PropensityModel::main_effects ? "main effects" : "saturated")
        << "): " << fixed(u.statistic) << "  df " << u.df << "  ratio " << fixed(u.ratio);
    if (u.p_value) out << "  p " << fixed(*u.p_value, 4);
    out << "\n  pMSE " << report.propensity->pmse << "\n";
    if (report.diagnosis) {
      out << "  terms with |z| >= " << fixed(report.diagnosis->threshold) << ": " << report.diagnosis->terms.size()
          << " of " << report.diagnosis->n_terms_tested << "\n";
      for (const auto& v : report.diagnosis->variables) {
        out << "    " << v.variable << " (" << v.terms.size() << ", max |z| " << fixed(v.max_abs_z) << ")\n";
      }
    }
  }
  for (const auto& t : report.tables) {
    out << "U_tab " << table_name(t.variables) << ": " << fixed(t.stat.statistic) << "  df " << t.stat.df
        << "  ratio " << fixed(t.stat.ratio);
    if (t.stat.p_value) out << "  p " << fixed(*t.stat.p_value, 4);
    out << "\n";
    for (const auto& c : t.worst_cells) {
      out << "    " << join(c.levels, " / ") << "  orig " << c.y << "  syn " << c.s << "  contribution "
          << fixed(c.contribution) << "\n";
    }
  }
  for (const auto& f : report.flags) out << "flag: " << f << "\n";
  return out.str();
}

std::string compare_report_text(const std::vector<UnivariateComparison>& univariate,
                                const std::vector<BivariateComparison>& bivariate) {
  std::ostringstream out;
  for (const auto& u : univariate) {
    out << u.variable << " (" << kind_name(u.kind) << ")  max |difference| " << fixed(u.max_abs_difference, 4) << "\n";
    if (u.kind == Kind::numeric) {
      out << "    original  min " << u.original.min << "  q1 " << u.original.q1 << "  median " << u.original.median
          << "  mean " << fixed(u.original.mean, 3) << "  q3 " << u.original.q3 << "  max " << u.original.max << "\n";
      out << "    synthetic min " << u.synthetic.min << "  q1 " << u.synthetic.q1 << "  median " << u.synthetic.median
          << "  mean " << fixed(u.synthetic.mean, 3) << "  q3 " << u.synthetic.q3 << "  max " << u.synthetic.max
          << "\n";
      if (u.range_exceeded) out << "    synthetic values fall outside the original range\n";
    } else {
      for (const auto& s : u.shares) {
        out << "    " << s.level << "  " << fixed(100 * s.original) << "%  " << fixed(100 * s.synthetic) << "%\n";
      }
    }
  }
  for (const auto& b : bivariate) {
    out << b.outcome_variable << " by " << b.band_variable << " (percent, original / synthetic)\n";
    for (const auto& band : b.bands) {
      out << "    " << band.band;
      for (std::size_t l = 0; l < b.outcome_levels.size(); ++l) {
        out << "  " << b.outcome_levels[l] << " " << fixed(band.pct_original[l]) << "/" << fixed(band.pct_synthetic[l]);
      }
      out << "\n";
    }
    out << "    max |difference| " << fixed(b.max_abs_difference) << " points\n";
  }
  return out.str();
}

std::string run_report_text(const SynthesisRun& run, const SdcReport* sdc) {
  std::ostringstream out;
  out << "synthesized " << run.synthetic.n_rows() << " rows, seed " << run.plan.seed << ", "
      << fixed(run.elapsed_seconds, 3) << " s\n";
  auto list = [&](const std::vector<VariableReport>& vars, const std::string& indent) {
    for (const auto& v : vars) {
      out << indent << v.variable << ": " << v.method;
      if (!v.missing_indicator_method.empty()) out << " (missing indicator: " << v.missing_indicator_method << ")";
      if (v.rule_rows_synthetic) out << ", " << v.rule_rows_synthetic << " rows set by rules";
      out << "\n";
    }
  };
  list(run.variables, "  ");
  for (const auto& s : run.strata) {
    out << "  stratum " << s.label << " (" << s.rows << " rows)\n";
    list(s.variables, "    ");
  }
  if (sdc) {
    out << "  replicated uniques removed: " << sdc->replicated_uniques_removed << "\n";
    out << "  label: " << sdc->label << "\n";
  }
  for (const auto& w : run.warnings) out << "warning: " << w << "\n";
  return out.str();
}

}  // namespace synthweave
