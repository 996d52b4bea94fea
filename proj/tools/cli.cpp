#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "synthweave/compare.hpp"
#include "synthweave/csv.hpp"
#include "synthweave/engine.hpp"
#include "synthweave/plan.hpp"
#include "synthweave/report.hpp"
#include "synthweave/sdc.hpp"
#include "synthweave/toy_census.hpp"
#include "synthweave/utility.hpp"

namespace synthweave::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("SYNTHWEAVE_SEED");
  if (!v || !*v) return std::nullopt;
  std::uint64_t seed = 0;
  const std::string s(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw UsageError("SYNTHWEAVE_SEED must be a non-negative integer, got '" + s + "'");
  }
  return seed;
}

fs::path sibling(const fs::path& data, const std::string& suffix) {
  return data.parent_path() / (data.stem().string() + suffix);
}

// Explicit --schema, else <stem>.schema.json, else <stem>.model.json.
Schema resolve_schema(const std::string& data_path, const std::string& schema_path) {
  if (!schema_path.empty()) return Schema::load(schema_path);
  for (const char* suffix : {".schema.json", ".model.json"}) {
    const fs::path p = sibling(data_path, suffix);
    if (fs::exists(p)) return Schema::load(p);
  }
  throw UsageError("no schema for '" + data_path + "'; pass --schema or place " +
                   sibling(data_path, ".schema.json").string() + " next to it");
}

Dataset load(const std::string& path, const Schema& schema) {
  if (!fs::exists(path)) throw UsageError("cannot read '" + path + "'");
  return read_csv(fs::path(path), schema);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
}

void write_data(const Dataset& data, const std::string& path) {
  write_csv(data, fs::path(path));
  write_text(sibling(path, ".schema.json").string(), Schema::of(data).to_json().dump(2) + "\n");
}

void require_columns(const Dataset& data, const std::vector<std::string>& names, const std::string& what) {
  for (const auto& n : names) {
    if (!data.has(n)) throw UsageError("unknown variable '" + n + "' in " + what);
  }
}

Rule parse_rule(const std::string& text) {
  const auto colon = text.find(':');
  const auto arrow = text.find("=>");
  if (colon == std::string::npos || arrow == std::string::npos || arrow < colon) {
    throw UsageError("rule must look like 'target: condition => value', got '" + text + "'");
  }
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  Rule r;
  r.target = trim(text.substr(0, colon));
  r.condition = trim(text.substr(colon + 1, arrow - colon - 1));
  std::string value = trim(text.substr(arrow + 2));
  if (value.size() >= 2 && (value.front() == '\'' || value.front() == '"') && value.back() == value.front()) {
    r.value = value.substr(1, value.size() - 2);
  } else {
    double d = 0.0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), d);
    if (ec == std::errc() && p == value.data() + value.size()) {
      r.value = d;
    } else {
      r.value = value;
    }
  }
  return r;
}

void print_diagnostics(const std::vector<PlanDiagnostic>& diags, std::ostream& err) {
  for (const auto& d : diags) {
    err << (d.severity == Severity::error ? "error" : "warning") << " [" << d.code << "] " << d.message;
    if (!d.subjects.empty()) {
      err << " (variables:";
      for (const auto& s : d.subjects) err << ' ' << s;
      err << ')';
    }
    err << '\n';
  }
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string data, plan, schema, out, report, stratifier, visit, label;
  std::vector<std::string> methods, rules;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rows;
  bool pretty = false;
  bool serial = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  const Schema schema = resolve_schema(a.data, a.schema);
  const Dataset original = load(a.data, schema);

  SynthesisPlan plan;
  bool seed_in_plan = false;
  if (!a.plan.empty()) {
    std::ifstream f(a.plan);
    if (!f) throw UsageError("cannot read plan '" + a.plan + "'");
    json doc;
    try {
      doc = json::parse(f);
    } catch (const json::exception& e) {
      throw UsageError("plan '" + a.plan + "' is not valid JSON: " + e.what());
    }
    plan = plan_from_json(doc);
    seed_in_plan = doc.contains("seed");
  } else {
    plan = default_plan(original);
  }

  if (!a.visit.empty()) {
    plan.visit_sequence = split(a.visit, ',');
    if (a.plan.empty()) plan.methods.clear();
  }
  if (!a.stratifier.empty()) {
    plan.stratifier = a.stratifier;
    std::erase(plan.visit_sequence, a.stratifier);
  }
  for (const auto& m : a.methods) {
    const auto eq = m.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--method expects var=method, got '" + m + "'");
    const std::string var = m.substr(0, eq);
    MethodSpec spec = parse_method_shorthand(m.substr(eq + 1));
    if (const auto* nested = std::get_if<NestedMethod>(&spec)) {
      plan.nesting[var] = nested->group_column;
    }
    plan.methods[var] = spec;
  }
  for (const auto& r : a.rules) plan.rules.push_back(parse_rule(r));
  if (a.rows) plan.options.n_synthetic = *a.rows;
  if (a.seed) {
    plan.seed = *a.seed;
  } else if (!seed_in_plan) {
    if (auto s = env_seed()) plan.seed = *s;
  }

  SynthesisOptions opts;
  opts.exec = a.serial ? Execution::serial : Execution::parallel;
  SynthesisRun run;
  try {
    run = synthesize(original, plan, opts);
  } catch (const PlanError& e) {
    if (e.diagnostics().empty()) {
      err << "error: " << e.what() << '\n';
    } else {
      print_diagnostics(e.diagnostics(), err);
    }
    return kUsage;
  }

  const std::string default_label = "synthweave seed " + std::to_string(plan.seed);
  SdcReport sdc_report;
  Dataset synthetic;
  if (plan.sdc) {
    SdcConfig cfg = *plan.sdc;
    if (!a.label.empty()) cfg.label = a.label;
    if (cfg.label.empty()) cfg.label = default_label;
    synthetic = apply_sdc(original, run.synthetic, cfg, plan.seed, sdc_report);
  } else {
    synthetic = stamp_synthetic(run.synthetic, a.label.empty() ? default_label : a.label);
  }
  write_data(synthetic, a.out);

  const SdcReport* sdc = plan.sdc ? &sdc_report : nullptr;
  if (!a.report.empty()) {
    json rep = run_report_json(run, sdc);
    rep["output"] = {{"path", a.out}, {"rows", synthetic.n_rows()}};
    write_text(a.report, rep.dump(2) + "\n");
  }
  if (a.pretty) {
    out << run_report_text(run, sdc);
  } else {
    for (const auto& w : run.warnings) err << "warning: " << w << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct UtilityArgs {
  std::string original, synthetic, schema, tables, model = "main", out, vars;
  std::size_t bins = 5;
  double z = 1.7;
  double ratio_flag = 3.0;
  bool no_propensity = false;
  bool pretty = false;
};

std::vector<std::vector<std::string>> parse_tables(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : split(text, ',')) {
    auto vars = split(t, '*');
    if (vars.empty()) throw UsageError("empty table in --tables");
    out.push_back(std::move(vars));
  }
  return out;
}

int cmd_utility(const UtilityArgs& a, std::ostream& out) {
  const Schema schema = resolve_schema(a.original, a.schema);
  const Dataset original = load(a.original, schema);
  const Dataset synthetic = load(a.synthetic, schema);

  UtilityRequest req;
  req.tables = parse_tables(a.tables);
  req.model = a.model == "saturated" ? PropensityModel::table_saturated : PropensityModel::main_effects;
  req.propensity = !a.no_propensity;
  req.z_threshold = a.z;
  req.numeric_bins = a.bins;
  req.ratio_flag = a.ratio_flag;
  if (!a.vars.empty()) req.saturated_variables = split(a.vars, ',');
  for (const auto& t : req.tables) {
    require_columns(original, t, "--tables");
    require_columns(synthetic, t, "--tables");
  }
  require_columns(original, req.saturated_variables, "--vars");
  require_columns(synthetic, req.saturated_variables, "--vars");
  if (req.model == PropensityModel::table_saturated && req.saturated_variables.empty() && req.tables.empty() &&
      req.propensity) {
    throw UsageError("the saturated model needs --tables or --vars");
  }

  const UtilityReport report = build_utility_report(original, synthetic, req);
  const std::string text = utility_report_json(report).dump(2) + "\n";
  if (!a.out.empty()) write_text(a.out, text);
  if (a.pretty) {
    out << utility_report_text(report);
  } else if (a.out.empty()) {
    out << text;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string original, synthetic, schema, pairs, breaks, out;
  std::size_t bins = 20;
  bool pretty = false;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const Schema schema = resolve_schema(a.original, a.schema);
  const Dataset original = load(a.original, schema);
  const Dataset synthetic = load(a.synthetic, schema);

  std::vector<double> cuts;
  for (const auto& b : split(a.breaks, ',')) {
    double d = 0.0;
    auto [p, ec] = std::from_chars(b.data(), b.data() + b.size(), d);
    if (ec != std::errc() || p != b.data() + b.size()) throw UsageError("--breaks: '" + b + "' is not a number");
    cuts.push_back(d);
  }
  if (!std::is_sorted(cuts.begin(), cuts.end())) throw UsageError("--breaks must be increasing");

  const auto uni = compare_univariate(original, synthetic, a.bins);
  std::vector<BivariateComparison> bi;
  for (const auto& pair : split(a.pairs, ',')) {
    const auto vars = split(pair, '*');
    if (vars.size() != 2) throw UsageError("--pairs expects band*outcome, got '" + pair + "'");
    require_columns(original, vars, "--pairs");
    require_columns(synthetic, vars, "--pairs");
    if (!original.column(vars[1]).is_categorical()) {
      throw UsageError("outcome '" + vars[1] + "' in --pairs must be categorical");
    }
    const bool numeric_band = original.column(vars[0]).is_numeric();
    bi.push_back(compare_bivariate(original, synthetic, vars[0], vars[1],
                                   numeric_band ? std::span<const double>(cuts) : std::span<const double>{}));
  }

  const std::string text = compare_report_json(uni, bi).dump(2) + "\n";
  if (!a.out.empty()) write_text(a.out, text);
  if (a.pretty) {
    out << compare_report_text(uni, bi);
  } else if (a.out.empty()) {
    out << text;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct GentoyArgs {
  std::size_t rows = 10000;
  std::optional<std::uint64_t> seed;
  std::optional<double> missing;
  std::string out;
};

int cmd_gentoy(const GentoyArgs& a, std::ostream& out) {
  if (a.rows < 100) throw UsageError("--rows must be at least 100");
  ToyCensusSpec spec;
  spec.n_rows = a.rows;
  spec.seed = a.seed ? *a.seed : env_seed().value_or(1);
  if (a.missing) spec.pperroom_missing = *a.missing;
  ToyCensus toy = generate_toy_census(spec);
  const Dataset data = stamp_synthetic(
      toy.data, "toy census, seed " + std::to_string(spec.seed) + ", " + std::to_string(spec.n_rows) + " rows");
  write_csv(data, fs::path(a.out));
  const std::string model_path = sibling(a.out, ".model.json").string();
  write_text(model_path, toy.model.dump(2) + "\n");
  out << "wrote " << a.out << " (" << spec.n_rows << " rows) and " << model_path << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct SdcArgs {
  std::string original, synthetic, schema, out, report, keys, noise, label;
  double noise_scale = 0.0;
  bool keep_uniques = false;
  std::optional<std::uint64_t> seed;
};

int cmd_sdc(const SdcArgs& a, std::ostream& out) {
  const Schema schema = resolve_schema(a.original, a.schema);
  const Dataset original = load(a.original, schema);
  const Dataset synthetic = load(a.synthetic, schema);

  SdcConfig cfg;
  cfg.remove_replicated_uniques = !a.keep_uniques;
  cfg.key_variables = split(a.keys, ',');
  cfg.noise_targets = split(a.noise, ',');
  cfg.noise_scale = a.noise_scale;
  require_columns(original, cfg.key_variables, "--keys");
  require_columns(synthetic, cfg.key_variables, "--keys");
  require_columns(synthetic, cfg.noise_targets, "--noise");
  if (!cfg.noise_targets.empty() && !(a.noise_scale > 0.0)) throw UsageError("--noise needs a positive --noise-scale");
  const std::uint64_t seed = a.seed ? *a.seed : env_seed().value_or(0);
  cfg.label = a.label;
  if (cfg.label.empty()) {
    auto it = synthetic.metadata().find("synthetic_label");
    cfg.label = it != synthetic.metadata().end() ? it->second : "synthweave sdc seed " + std::to_string(seed);
  }

  SdcReport report;
  const Dataset result = apply_sdc(original, synthetic, cfg, seed, report);
  write_data(result, a.out);
  json rep = {{"replicated_uniques_removed", report.replicated_uniques_removed},
              {"key_variables", report.key_variables},
              {"noise_targets", report.noise_targets},
              {"noise_scale", report.noise_scale},
              {"label", report.label},
              {"rows_in", synthetic.n_rows()},
              {"rows_out", result.n_rows()}};
  if (!a.report.empty()) write_text(a.report, rep.dump(2) + "\n");
  out << "removed " << report.replicated_uniques_removed << " replicated unique rows; wrote " << result.n_rows()
      << " rows to " << a.out << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic microdata by sequential conditional modelling"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize a data set");
  synth->add_option("--data", sa.data, "Original CSV")->required();
  synth->add_option("--plan", sa.plan, "Plan JSON (defaults to CART in column order)");
  synth->add_option("--schema", sa.schema, "Schema JSON for the CSV");
  synth->add_option("--out", sa.out, "Synthetic CSV to write")->required();
  synth->add_option("--report", sa.report, "Run report JSON");
  synth->add_option("--seed", sa.seed, "Seed (overrides the plan; SYNTHWEAVE_SEED is the fallback)");
  synth->add_option("--stratifier", sa.stratifier, "Categorical column to stratify on");
  synth->add_option("--visit-sequence", sa.visit, "Comma-separated visit sequence");
  synth->add_option("--method", sa.methods, "var=method, e.g. age=normrank or occ_fine=nested:occ");
  synth->add_option("--rule", sa.rules, "'target: condition => value'");
  synth->add_option("--rows", sa.rows, "Synthetic row count");
  synth->add_option("--label", sa.label, "Text of the SYNTHETIC DATA stamp");
  synth->add_flag("--serial", sa.serial, "Disable threading");
  synth->add_flag("--pretty", sa.pretty, "Print a text report");

  UtilityArgs ua;
  auto* utility = app.add_subcommand("utility", "Measure the utility of a synthetic data set");
  utility->add_option("--original", ua.original)->required();
  utility->add_option("--synthetic", ua.synthetic)->required();
  utility->add_option("--schema", ua.schema);
  utility->add_option("--tables", ua.tables, "Tables as a*b,c*d");
  utility->add_option("--model", ua.model, "Propensity model")->check(CLI::IsMember({"main", "saturated"}));
  utility->add_option("--vars", ua.vars, "Variables of the propensity model");
  utility->add_option("--bins", ua.bins, "Quantile bins for numeric variables")->check(CLI::PositiveNumber);
  utility->add_option("--z", ua.z, "|z| threshold for flagged terms");
  utility->add_option("--ratio-flag", ua.ratio_flag, "Flag tables whose ratio exceeds this");
  utility->add_flag("--no-propensity", ua.no_propensity, "Skip the propensity model");
  utility->add_option("--out", ua.out, "Report JSON (stdout when absent)");
  utility->add_flag("--pretty", ua.pretty);

  CompareArgs ca;
  auto* compare = app.add_subcommand("compare", "Compare original and synthetic distributions");
  compare->add_option("--original", ca.original)->required();
  compare->add_option("--synthetic", ca.synthetic)->required();
  compare->add_option("--schema", ca.schema);
  compare->add_option("--pairs", ca.pairs, "band*outcome pairs, e.g. age*mar");
  compare->add_option("--breaks", ca.breaks, "Cut points for numeric band variables");
  compare->add_option("--bins", ca.bins, "Histogram bins")->check(CLI::PositiveNumber);
  compare->add_option("--out", ca.out);
  compare->add_flag("--pretty", ca.pretty);

  GentoyArgs ga;
  auto* gentoy = app.add_subcommand("gentoy", "Generate the toy census");
  gentoy->add_option("--rows", ga.rows);
  gentoy->add_option("--seed", ga.seed);
  gentoy->add_option("--missing", ga.missing, "Share of pperroom set missing")->check(CLI::Range(0.0, 1.0));
  gentoy->add_option("--out", ga.out)->required();

  SdcArgs da;
  auto* sdc = app.add_subcommand("sdc", "Apply disclosure control to a synthetic data set");
  sdc->add_option("--original", da.original)->required();
  sdc->add_option("--synthetic", da.synthetic)->required();
  sdc->add_option("--schema", da.schema);
  sdc->add_option("--out", da.out)->required();
  sdc->add_option("--report", da.report);
  sdc->add_option("--keys", da.keys, "Key variables for replicated uniques (default all)");
  sdc->add_flag("--keep-uniques", da.keep_uniques, "Skip replicated-unique removal");
  sdc->add_option("--noise", da.noise, "Numeric columns to perturb");
  sdc->add_option("--noise-scale", da.noise_scale, "Noise sd as a multiple of the column sd");
  sdc->add_option("--label", da.label);
  sdc->add_option("--seed", da.seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(sa, out, err);
    if (utility->parsed()) return cmd_utility(ua, out);
    if (compare->parsed()) return cmd_compare(ca, out);
    if (gentoy->parsed()) return cmd_gentoy(ga, out);
    if (sdc->parsed()) return cmd_sdc(da, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const PlanError& e) {
    err << "error: " << e.what() << '\n';
    print_diagnostics(e.diagnostics(), err);
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace synthweave::cli
