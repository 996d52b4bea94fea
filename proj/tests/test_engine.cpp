#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "synthweave/engine.hpp"
#include "synthweave/stats.hpp"
#include "synthweave/toy_census.hpp"
#include "synthweave/utility.hpp"

using namespace synthweave;
using testing::cat;
using testing::num;
using testing::to_csv;

namespace {

Dataset toy(std::size_t n, std::uint64_t seed) {
  ToyCensusSpec spec;
  spec.n_rows = n;
  spec.seed = seed;
  return generate_toy_census(spec).data;
}

Dataset small_toy(std::size_t n, std::uint64_t seed) {
  return toy(n, seed).select(std::vector<std::string>{"region", "sex", "age", "mar", "pperroom"});
}

std::size_t violations(const Dataset& d, const Rule& rule) {
  const auto hit = Condition::parse(rule.condition).evaluate(d);
  const Column& t = d.column(rule.target);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    if (!hit[i]) continue;
    if (t.missing(i) || t.format(i) != literal_text(rule.value)) ++bad;
  }
  return bad;
}

double missing_rate(const Column& c) { return static_cast<double>(c.missing_count()) / c.size(); }

std::vector<double> numbers_of(const Column& c) {
  std::vector<double> out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.missing(i)) out.push_back(c.number(i));
  }
  return out;
}

}  // namespace

TEST_CASE("determinism: same data, plan and seed give byte-identical CSV") {
  Dataset d = small_toy(3000, 5);
  SynthesisPlan plan = default_plan(d, CartMethod{}, 11);
  plan.rules.push_back({"mar", "age < 16", std::string("Single")});
  const std::string a = to_csv(synthesize(d, plan).synthetic);
  const std::string b = to_csv(synthesize(d, plan).synthetic);
  CHECK(a == b);
  const std::string serial = to_csv(synthesize(d, plan, {Execution::serial}).synthetic);
  CHECK(a == serial);
  plan.seed = 12;
  CHECK(to_csv(synthesize(d, plan).synthetic) != a);
}

TEST_CASE("synthetic has the visit columns in original order") {
  Dataset d = small_toy(500, 1);
  SynthesisPlan plan = default_plan(d);
  plan.visit_sequence = {"sex", "age", "mar"};
  plan.methods.clear();
  SynthesisRun run = synthesize(d, plan);
  CHECK(run.synthetic.names() == std::vector<std::string>{"sex", "age", "mar"});
  CHECK(run.synthetic.n_rows() == 500);
  CHECK(run.variables.size() == 3);
  CHECK(run.variables[0].method == "sample");
}

TEST_CASE("n_synthetic changes the synthetic size") {
  Dataset d = small_toy(500, 1);
  SynthesisPlan plan = default_plan(d);
  plan.options.n_synthetic = 1234;
  CHECK(synthesize(d, plan).synthetic.n_rows() == 1234);
}

TEST_CASE("toy census under-16 rule leaves no married children") {
  Dataset d = small_toy(20000, 2);
  SynthesisPlan plan = default_plan(d, CartMethod{}, 3);
  plan.methods["mar"] = MultinomialMethod{};
  const Rule rule{"mar", "age < 16", std::string("Single")};
  plan.rules.push_back(rule);
  SynthesisRun run = synthesize(d, plan);
  CHECK(violations(run.synthetic, rule) == 0);
  const auto& rep = run.variables[3];
  CHECK(rep.variable == "mar");
  CHECK(rep.rule_rows_original > 0);
  CHECK(rep.n_fit + rep.rule_rows_original == d.n_rows());
  CHECK(rep.rule_rows_synthetic > 0);
}

TEST_CASE("property: rules hold exactly for random rule sets") {
  Rng gen(90);
  Dataset d = small_toy(2000, 9);
  const std::vector<std::string> regions = {"North", "Midlands", "East", "London", "SouthEast", "SouthWest"};
  const std::vector<std::string> mars = {"Single", "Married", "Widowed"};
  for (int rep = 0; rep < 12; ++rep) {
    SynthesisPlan plan = default_plan(d, CartMethod{}, gen.next());
    std::vector<Rule> rules;
    rules.push_back({"mar", "age < " + std::to_string(10 + gen.index(30)), mars[gen.index(3)]});
    rules.push_back({"mar", "region == " + regions[gen.index(6)] + " & sex == Female", mars[gen.index(3)]});
    rules.push_back({"pperroom", "age >= " + std::to_string(60 + gen.index(30)), static_cast<double>(gen.index(4))});
    plan.rules = rules;
    SynthesisRun run = synthesize(d, plan);
    // Earlier rules win where conditions overlap.
    std::vector<std::uint8_t> taken(d.n_rows(), 0);
    for (const auto& rule : rules) {
      const auto hit = Condition::parse(rule.condition).evaluate(run.synthetic);
      const Column& t = run.synthetic.column(rule.target);
      for (std::size_t i = 0; i < d.n_rows(); ++i) {
        if (!hit[i] || (rule.target == "mar" && taken[i])) continue;
        if (rule.target == "mar") taken[i] = 1;
        CHECK(t.format(i) == literal_text(rule.value));
      }
    }
  }
}

TEST_CASE("leakage: permuting a later column leaves earlier columns unchanged") {
  Dataset d = small_toy(3000, 4);
  SynthesisPlan plan = default_plan(d, CartMethod{}, 21);
  SynthesisRun base = synthesize(d, plan);

  std::vector<std::size_t> perm(d.n_rows());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(3);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  Dataset shuffled(d.n_rows());
  for (const auto& col : d.columns()) {
    shuffled.add_column(col.name() == "mar" ? d.subset_rows(perm).column("mar") : col);
  }
  SynthesisRun other = synthesize(shuffled, plan);
  for (const auto& v : {"region", "sex", "age"}) CHECK(base.synthetic.column(v) == other.synthetic.column(v));
  CHECK(!(base.synthetic.column("mar") == other.synthetic.column("mar")));
}

TEST_CASE("stratified: stratum s equals unstratified synthesis of its subset on stream s") {
  Dataset d = small_toy(3000, 6);
  SynthesisPlan plan = default_plan(d, CartMethod{}, 8);
  plan.stratifier = "region";
  plan.visit_sequence = {"sex", "age", "mar", "pperroom"};
  plan.methods.clear();
  SynthesisRun run = synthesize(d, plan);
  REQUIRE(run.strata.size() == 6);

  SynthesisPlan inner = plan;
  inner.stratifier.reset();
  const Column& region = d.column("region");
  for (const auto& sr : run.strata) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
      if (region.format(i) == sr.label) rows.push_back(i);
    }
    CHECK(rows.size() == sr.rows);
    Dataset part = d.subset_rows(rows);
    SynthesisRun alone = synthesize(part, inner, {Execution::parallel, sr.stream});
    Dataset stratum = run.synthetic.subset_rows(rows);
    for (const auto& v : inner.visit_sequence) CHECK(stratum.column(v) == alone.synthetic.column(v));
    CHECK(stratum.column("region") == part.column("region"));
  }
}

TEST_CASE("stratified: strata of 600 and 400 keep their sizes") {
  std::vector<std::string> s(1000);
  std::vector<double> x(1000);
  Rng rng(1);
  for (std::size_t i = 0; i < 1000; ++i) {
    s[i] = i < 600 ? "A" : "B";
    x[i] = rng.normal();
  }
  Dataset d(1000);
  d.add_column(cat("s", s));
  d.add_column(num("x", x));
  SynthesisPlan plan;
  plan.visit_sequence = {"x"};
  plan.stratifier = "s";
  SynthesisRun run = synthesize(d, plan);
  std::size_t a = 0;
  for (std::size_t i = 0; i < 1000; ++i) a += run.synthetic.column("s").format(i) == "A";
  CHECK(a == 600);
  CHECK(run.strata[0].rows == 600);
  CHECK(run.strata[1].rows == 400);
}

TEST_CASE("stratified: small strata are pooled with a warning") {
  std::vector<std::string> s(500);
  for (std::size_t i = 0; i < 500; ++i) s[i] = i < 400 ? "big" : (i < 450 ? "tiny1" : "tiny2");
  Dataset d(500);
  d.add_column(cat("s", s));
  d.add_column(num("x", std::vector<double>(500, 1.0)));
  SynthesisPlan plan;
  plan.visit_sequence = {"x"};
  plan.stratifier = "s";
  SynthesisRun run = synthesize(d, plan);
  REQUIRE(run.strata.size() == 2);
  CHECK(run.strata[1].label == "other");
  CHECK(run.strata[1].levels == std::vector<std::string>{"tiny1", "tiny2"});
  bool warned = false;
  for (const auto& w : run.warnings) warned |= w.find("tiny1, tiny2") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("stratified: missing stratifier values are rejected") {
  Dataset d(200);
  std::vector<std::string> s(200, "A");
  s[3] = "NA";
  d.add_column(cat("s", s));
  d.add_column(num("x", std::vector<double>(200, 1.0)));
  SynthesisPlan plan;
  plan.visit_sequence = {"x"};
  plan.stratifier = "s";
  CHECK_THROWS_AS(synthesize(d, plan), PlanError);
}

TEST_CASE("errors: empty dataset and method/type mismatch") {
  Dataset empty(0);
  empty.add_column(num("x", {}));
  CHECK_THROWS_WITH_AS(synthesize(empty, default_plan(empty)), "empty dataset", DataError);

  Dataset d = small_toy(300, 1);
  SynthesisPlan plan = default_plan(d);
  plan.methods["region"] = SampleMethod{};
  plan.methods["mar"] = LogitMethod{};
  plan.visit_sequence = {"sex", "region"};
  plan.methods["region"] = LogitMethod{};
  try {
    synthesize(d, plan);
    FAIL("expected PlanError");
  } catch (const PlanError& e) {
    bool found = false;
    for (const auto& diag : e.diagnostics()) found |= diag.code == "method_type";
    CHECK(found);
  }
}

TEST_CASE("missing numeric values: rate is reproduced through the indicator") {
  const std::size_t n = 100000;
  Rng rng(13);
  std::vector<double> x(n), y(n);
  std::vector<std::uint8_t> ym(n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.index(i + 1)]);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = x[i] + rng.normal();
  }
  for (std::size_t k = 0; k < 7200; ++k) ym[idx[k]] = 1;
  Dataset d(n);
  d.add_column(num("x", x));
  d.add_column(num("y", y, ym));
  SynthesisPlan plan = default_plan(d, NormRankMethod{}, 2);
  SynthesisRun run = synthesize(d, plan);
  CHECK(std::abs(missing_rate(run.synthetic.column("y")) - 0.072) < 0.01);
  CHECK(run.variables[1].missing_indicator_method == "logit");

  plan = default_plan(d, CartMethod{}, 2);
  run = synthesize(d, plan);
  CHECK(std::abs(missing_rate(run.synthetic.column("y")) - 0.072) < 0.01);
  CHECK(run.variables[1].missing_indicator_method == "cart");
}

TEST_CASE("missing numeric values: no missing skips the indicator") {
  Dataset d = small_toy(1000, 3).select(std::vector<std::string>{"sex", "age"});
  SynthesisPlan plan = default_plan(d, CartMethod{}, 4);
  SynthesisRun run = synthesize(d, plan);
  CHECK(run.variables[1].missing_indicator_method.empty());
  CHECK(run.synthetic.column("age").missing_count() == 0);
}

TEST_CASE("missing numeric values: separable missingness follows the predictor") {
  const std::size_t n = 5000;
  Rng rng(14);
  std::vector<std::string> b(n);
  std::vector<double> y(n);
  std::vector<std::uint8_t> ym(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool flag = rng.uniform() < 0.3;
    b[i] = flag ? "off" : "on";
    ym[i] = flag;
    y[i] = rng.normal();
  }
  Dataset d(n);
  d.add_column(cat("b", b));
  d.add_column(num("y", y, ym));
  SynthesisRun run = synthesize(d, default_plan(d, CartMethod{}, 5));
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    agree += run.synthetic.column("y").missing(i) == (run.synthetic.column("b").format(i) == "off");
  }
  CHECK(static_cast<double>(agree) / n >= 0.99);
}

TEST_CASE("categorical missing values are synthesized as a level") {
  std::vector<std::string> v(4000);
  Rng rng(15);
  for (auto& s : v) s = rng.uniform() < 0.1 ? "NA" : (rng.uniform() < 0.5 ? "a" : "b");
  Dataset d(4000);
  d.add_column(num("x", std::vector<double>(4000, 0.0)));
  d.add_column(cat("c", v));
  SynthesisRun run = synthesize(d, default_plan(d, CartMethod{}, 6));
  CHECK(std::abs(missing_rate(run.synthetic.column("c")) - missing_rate(d.column("c"))) < 0.02);
}

TEST_CASE("sample-only plan keeps marginals but destroys association") {
  Dataset d = toy(100000, 7).select(std::vector<std::string>{"sex", "age", "mar", "pperroom"});
  SynthesisPlan plan = default_plan(d, SampleMethod{}, 8);
  SynthesisRun run = synthesize(d, plan);
  for (const auto& v : {"age", "pperroom"}) {
    CHECK(ks_distance(numbers_of(d.column(v)), numbers_of(run.synthetic.column(v))) < 0.03);
  }
  const std::vector<std::string> pair = {"age", "mar"};
  UtilityStat u = u_tab(cross_tabulate(d, run.synthetic, pair));
  CHECK(u.ratio > 5.0);
}

TEST_CASE("reorder then synthesize") {
  Dataset d = small_toy(1000, 2);
  SynthesisPlan plan = default_plan(d, CartMethod{}, 9);
  ReorderResult moved = reorder_visit(plan, "mar", 0);
  CHECK(moved.plan.visit_sequence.front() == "mar");
  SynthesisRun run = synthesize(d, moved.plan);
  CHECK(run.variables.front().variable == "mar");
  CHECK(run.variables.front().method == "sample");
}
