#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "synthweave/csv.hpp"
#include "synthweave/engine.hpp"
#include "synthweave/plan.hpp"
#include "synthweave/rng.hpp"
#include "synthweave/toy_census.hpp"

using namespace synthweave;
using testing::cat;
using testing::num;

namespace {

Schema simple_schema() {
  Schema s;
  s.set("x", {Kind::numeric, {}, false, false});
  s.set("g", {Kind::categorical, {"a", "b"}, false, false});
  return s;
}

Dataset five_vars() {
  Dataset d(6);
  d.add_column(cat("a", {"p", "q", "p", "q", "p", "q"}));
  d.add_column(num("b", {1, 2, 3, 4, 5, 6}));
  d.add_column(cat("c", {"u", "u", "v", "v", "w", "w"}));
  d.add_column(num("d", {0.5, 0.1, 0.2, 0.9, 0.3, 0.4}));
  d.add_column(cat("e", {"k", "l", "k", "l", "k", "k"}));
  return d;
}

}  // namespace

TEST_CASE("columns keep codes, levels and a separate missing mask") {
  Column c = cat("g", {"a", "NA", "b", "a"});
  CHECK(c.size() == 4);
  CHECK(c.level_count() == 2);
  CHECK(c.missing(1));
  CHECK(c.missing_count() == 1);
  CHECK(c.format(1) == "NA");
  CHECK(c.format(2) == "b");
  CHECK(c.find_level("b") == 1);
  CHECK_FALSE(c.find_level("z").has_value());

  Column x = num("x", {1.5, 0.0, -2.0}, {0, 1, 0});
  CHECK(x.missing(1));
  CHECK(x.format(0) == "1.5");
  x.set_number(1, 4.0);
  CHECK_FALSE(x.missing(1));
  CHECK(x.number(1) == 4.0);
}

TEST_CASE("categorical codes must index the level table") {
  CHECK_THROWS_AS(Column::categorical("g", {"a"}, {0, 1}), DataError);
  CHECK_THROWS_AS(Column::categorical("g", {}, {}), DataError);
}

TEST_CASE("datasets enforce equal lengths and unique names") {
  Dataset d(3);
  d.add_column(num("x", {1, 2, 3}));
  CHECK_THROWS_AS(d.add_column(num("y", {1, 2})), DataError);
  CHECK_THROWS_AS(d.add_column(num("x", {1, 2, 3})), DataError);
  CHECK_THROWS_AS(d.add_column(num("", {1, 2, 3})), DataError);
  std::vector<std::string> none;
  CHECK(d.select(none).n_rows() == 3);
}

TEST_CASE("read_csv: NA in a numeric column gives one missing value") {
  std::istringstream in("x,g\n1.5,a\nNA,b\n3,a\n");
  Dataset d = read_csv(in, simple_schema());
  REQUIRE(d.n_rows() == 3);
  CHECK(d.column("x").missing_count() == 1);
  CHECK(d.column("x").missing(1));
  CHECK(d.column("g").format(1) == "b");
}

TEST_CASE("read_csv: duplicated header is an error") {
  std::istringstream in("x,x\n1,2\n");
  Schema s;
  s.set("x", {Kind::numeric, {}, false, false});
  CHECK_THROWS_AS(read_csv(in, s), DataError);
}

TEST_CASE("read_csv: header only gives zero rows") {
  std::istringstream in("x,g\n");
  Dataset d = read_csv(in, simple_schema());
  CHECK(d.n_rows() == 0);
  CHECK(d.n_cols() == 2);
}

TEST_CASE("read_csv rejects unknown levels and bad numbers with line context") {
  std::istringstream bad_level("x,g\n1,a\n2,c\n");
  CHECK_THROWS_WITH_AS(read_csv(bad_level, simple_schema()), doctest::Contains("line 3"), DataError);
  std::istringstream bad_num("x,g\n1,a\nabc,b\n");
  CHECK_THROWS_AS(read_csv(bad_num, simple_schema()), DataError);
}

TEST_CASE("read_csv skips comment lines and keeps the synthetic label") {
  std::istringstream in("# SYNTHETIC DATA: run 4\nx,g\n# another comment\n1,a\n");
  Dataset d = read_csv(in, simple_schema());
  CHECK(d.n_rows() == 1);
  CHECK(d.metadata().at("synthetic_label") == "run 4");
}

TEST_CASE("missing_as_level turns the token into an ordinary level") {
  Schema s;
  s.set("g", {Kind::categorical, {}, true, true});
  std::istringstream in("g\na\nNA\nb\n");
  Dataset d = read_csv(in, s);
  CHECK(d.column("g").missing_count() == 0);
  CHECK(d.column("g").find_level("NA").has_value());
}

TEST_CASE("write_csv: missing token exactly at missing cells") {
  Dataset d(3);
  d.add_column(num("x", {1.0, 0.0, 2.25}, {0, 1, 0}));
  d.add_column(cat("g", {"a", "b", "NA"}));
  CHECK(testing::to_csv(d) == "x,g\n1,a\nNA,b\n2.25,NA\n");
}

TEST_CASE("write_csv: zero rows gives a header-only file") {
  Dataset d(0);
  d.add_column(num("x", {}));
  d.add_column(cat("g", {}, {"a"}));
  CHECK(testing::to_csv(d) == "x,g\n");
}

TEST_CASE("write_csv quotes awkward text and the reader undoes it") {
  Dataset d(2);
  d.add_column(cat("g", {"plain", "has,comma \"q\""}));
  const std::string text = testing::to_csv(d);
  CHECK(text.find("\"has,comma \"\"q\"\"\"") != std::string::npos);
  std::istringstream in(text);
  CHECK(read_csv(in, Schema::of(d)) == d);
}

TEST_CASE("toy census round-trips through CSV") {
  ToyCensusSpec spec;
  spec.n_rows = 2000;
  spec.seed = 5;
  ToyCensus toy = generate_toy_census(spec);
  std::istringstream in(testing::to_csv(toy.data));
  CHECK(read_csv(in, toy.schema) == toy.data);
}

TEST_CASE("property: numeric CSV round-trip is exact for random doubles") {
  Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rng.index(50);
    std::vector<double> v(n);
    std::vector<std::uint8_t> m(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = std::pow(10.0, static_cast<double>(rng.index(20)) - 10.0);
      v[i] = rng.normal() * scale;
      m[i] = rng.uniform() < 0.1;
    }
    Dataset d(n);
    d.add_column(num("v", v, m));
    std::istringstream in(testing::to_csv(d));
    CHECK(read_csv(in, Schema::of(d)) == d);
  }
}

TEST_CASE("schema JSON round-trip and nested schema documents") {
  Schema s = simple_schema();
  Schema back = Schema::from_json(s.to_json());
  REQUIRE(back.columns.size() == 2);
  CHECK(back.find("g")->levels == std::vector<std::string>{"a", "b"});
  nlohmann::json wrapped = {{"generator", "x"}, {"schema", s.to_json()}};
  CHECK(Schema::from_json(wrapped).columns.size() == 2);
}

// ---------------------------------------------------------------------------
// Plans

TEST_CASE("validate_plan: first variable Sample with a valid matrix gives no errors") {
  Dataset d = five_vars();
  SynthesisPlan plan = default_plan(d);
  CHECK_FALSE(has_errors(validate_plan(plan, d)));
}

TEST_CASE("validate_plan: predictor after its target names both variables") {
  Dataset d = five_vars();
  SynthesisPlan plan = default_plan(d);
  plan.predictor_matrix["c"] = {"a", "e"};
  auto diags = validate_plan(plan, d);
  int errors = 0;
  for (const auto& dg : diags) {
    if (dg.severity != Severity::error) continue;
    ++errors;
    CHECK(dg.code == "predictor_order");
    CHECK(dg.subjects == std::vector<std::string>{"c", "e"});
  }
  CHECK(errors == 1);
}

TEST_CASE("validate_plan: many-level variable placed first draws guideline 6") {
  std::vector<std::string> values;
  for (int i = 0; i < 711 * 2; ++i) values.push_back("L" + std::to_string(i % 711));
  Dataset d(values.size());
  d.add_column(cat("occ", values));
  d.add_column(num("age", std::vector<double>(values.size(), 30.0)));
  SynthesisPlan plan = default_plan(d);
  bool found = false;
  for (const auto& dg : validate_plan(plan, d)) {
    if (dg.code == "guideline_6") {
      found = true;
      CHECK(dg.severity == Severity::warning);
      CHECK(dg.message.find("Move variables with many categories to the end") != std::string::npos);
    }
  }
  CHECK(found);
}

TEST_CASE("validate_plan catches each structural error") {
  Dataset d = five_vars();
  auto codes_of = [&](const SynthesisPlan& p) {
    std::vector<std::string> out;
    for (const auto& dg : validate_plan(p, d)) {
      if (dg.severity == Severity::error) out.push_back(dg.code);
    }
    return out;
  };
  auto has = [](const std::vector<std::string>& v, const std::string& c) {
    return std::find(v.begin(), v.end(), c) != v.end();
  };
  SynthesisPlan base = default_plan(d);

  SynthesisPlan p = base;
  p.visit_sequence.push_back("zz");
  CHECK(has(codes_of(p), "unknown_column"));

  p = base;
  p.visit_sequence.push_back("a");
  CHECK(has(codes_of(p), "duplicate_visit"));

  p = base;
  p.methods["a"] = CartMethod{};
  CHECK(has(codes_of(p), "first_variable_method"));

  p = base;
  p.methods["b"] = LogitMethod{};
  CHECK(has(codes_of(p), "method_type"));

  p = base;
  p.methods["c"] = CartMethod{0, 0.0};
  CHECK(has(codes_of(p), "method_parameters"));

  p = base;
  p.rules.push_back({"c", "e == k", std::string("u")});
  CHECK(has(codes_of(p), "rule_order"));

  p = base;
  p.rules.push_back({"c", "b < 3", std::string("nope")});
  CHECK(has(codes_of(p), "rule_value"));

  p = base;
  p.rules.push_back({"c", "b <", std::string("u")});
  CHECK(has(codes_of(p), "rule_condition"));

  p = base;
  p.nesting["e"] = "c";
  CHECK(has(codes_of(p), "nesting_method"));

  p = base;
  p.stratifier = "c";
  CHECK(has(codes_of(p), "stratifier"));
}

TEST_CASE("property: validate_plan is pure and valid plans respect rule precedence") {
  Dataset d = five_vars();
  Rng rng(1234);
  const std::vector<std::string> names = d.names();
  for (int rep = 0; rep < 200; ++rep) {
    SynthesisPlan plan;
    std::vector<std::string> order = names;
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    plan.visit_sequence = order;
    plan.methods[order[0]] = SampleMethod{};
    // Random rules on random columns, some of them out of order.
    const std::size_t n_rules = rng.index(3);
    for (std::size_t r = 0; r < n_rules; ++r) {
      const std::string target = order[rng.index(order.size())];
      const std::string on = order[rng.index(order.size())];
      const Column& oc = d.column(on);
      std::string cond = oc.is_numeric() ? on + " < 3" : on + " == " + oc.levels()[0];
      const Column& tc = d.column(target);
      Literal value = tc.is_numeric() ? Literal(1.0) : Literal(tc.levels()[0]);
      plan.rules.push_back({target, cond, value});
    }
    const auto first = validate_plan(plan, d);
    const auto second = validate_plan(plan, d);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
      CHECK(first[i].code == second[i].code);
      CHECK(first[i].message == second[i].message);
    }
    if (has_errors(first)) continue;
    for (const auto& rule : plan.rules) {
      for (const auto& col : Condition::parse(rule.condition).referenced_columns()) {
        CHECK(*plan.position_of(col) < *plan.position_of(rule.target));
      }
    }
  }
}

TEST_CASE("conditions: conjunctions, quoting and missing cells") {
  Dataset d(4);
  d.add_column(num("age", {10, 20, 30, 0}, {0, 0, 0, 1}));
  d.add_column(cat("sex", {"M", "F", "F", "M"}));
  Condition c = Condition::parse("age >= 20 & sex == 'F'");
  CHECK(c.terms.size() == 2);
  CHECK(c.evaluate(d) == std::vector<std::uint8_t>{0, 1, 1, 0});
  CHECK(Condition::parse("age < 15 and sex != F").evaluate(d) == std::vector<std::uint8_t>{1, 0, 0, 0});
  CHECK(Condition::parse("age<15").evaluate(d)[3] == 0);
  CHECK(Condition::parse("age < 15").referenced_columns() == std::vector<std::string>{"age"});
  CHECK_THROWS_AS(Condition::parse("age <"), PlanError);
  CHECK_THROWS_AS(Condition::parse("age ~ 3"), PlanError);
  CHECK_THROWS_AS(Condition::parse("zz < 3").evaluate(d), DataError);
}

TEST_CASE("plan JSON round-trip") {
  SynthesisPlan plan;
  plan.visit_sequence = {"a", "b", "c"};
  plan.methods["a"] = SampleMethod{};
  plan.methods["b"] = NormRankMethod{0.8};
  plan.methods["c"] = NestedMethod{"a"};
  plan.nesting["c"] = "a";
  plan.predictor_matrix["b"] = {"a"};
  plan.rules.push_back({"b", "a == x", 0.0});
  plan.seed = 77;
  plan.options.min_stratum_rows = 50;
  plan.sdc = SdcConfig{true, {"a"}, {"b"}, 0.1, "L"};
  CHECK(plan_from_json(plan_to_json(plan)) == plan);
}

TEST_CASE("method shorthands") {
  CHECK(std::holds_alternative<CartMethod>(parse_method_shorthand("cart")));
  CHECK(std::get<TransformNormalMethod>(parse_method_shorthand("sqrt")).transform == Transform::sqrt);
  CHECK(std::get<NestedMethod>(parse_method_shorthand("nested:occ")).group_column == "occ");
  CHECK(std::holds_alternative<MultinomialMethod>(parse_method_shorthand("polyreg")));
  CHECK_THROWS_AS(parse_method_shorthand("nested"), PlanError);
  CHECK_THROWS_AS(parse_method_shorthand("forest"), PlanError);
}

TEST_CASE("reorder_visit: last to first coerces Sample with a warning") {
  Dataset d = five_vars();
  SynthesisPlan plan = default_plan(d);
  ReorderResult r = reorder_visit(plan, "e", 0);
  CHECK(r.plan.visit_sequence.front() == "e");
  CHECK(std::holds_alternative<SampleMethod>(r.plan.method_for("e")));
  CHECK_FALSE(r.warnings.empty());
  CHECK_FALSE(has_errors(validate_plan(r.plan, d)));
}

TEST_CASE("reorder_visit: moving to the current position is idempotent") {
  Dataset d = five_vars();
  SynthesisPlan plan = default_plan(d);
  plan.predictor_matrix["d"] = {"a", "c"};
  CHECK(reorder_visit(plan, "c", 2).plan == plan);
  CHECK_THROWS_AS(reorder_visit(plan, "zz", 0), PlanError);
}

TEST_CASE("property: any reorder of a valid plan stays valid") {
  Dataset d = five_vars();
  Rng rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    SynthesisPlan plan = default_plan(d);
    plan.predictor_matrix["d"] = {"b", "c"};
    plan.predictor_matrix["e"] = {"a"};
    plan.rules.push_back({"e", "b < 3", std::string("k")});
    const auto names = d.names();
    const std::string col = names[rng.index(names.size())];
    const std::size_t pos = rng.uniform() < 0.2 ? kVisitEnd : rng.index(names.size());
    ReorderResult r = reorder_visit(plan, col, pos);
    // Rules cannot be repaired automatically; they are reported instead.
    SynthesisPlan check = r.plan;
    check.rules.clear();
    CHECK_FALSE(has_errors(validate_plan(check, d)));
  }
}

TEST_CASE("substream seeds differ by key and stratum and are stable") {
  CHECK(substream_seed(1, 0, hash_name("age")) != substream_seed(1, 0, hash_name("sex")));
  CHECK(substream_seed(1, 0, hash_name("age")) != substream_seed(1, 1, hash_name("age")));
  CHECK(substream_seed(1, 0, hash_name("age")) == substream_seed(1, 0, hash_name("age")));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("Rng::index is unbiased over a small range") {
  Rng rng(3);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 300000; ++i) ++counts[rng.index(3)];
  for (int c : counts) CHECK(std::abs(c - 100000) < 1500);
}
