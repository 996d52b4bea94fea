#include <benchmark/benchmark.h>

#include <map>
#include <vector>

#include "synthweave/cart.hpp"
#include "synthweave/engine.hpp"
#include "synthweave/kernels.hpp"
#include "synthweave/rng.hpp"
#include "synthweave/toy_census.hpp"
#include "synthweave/utility.hpp"

using namespace synthweave;

namespace {

Execution exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Execution::serial : Execution::parallel;
}

struct GramInput {
  Eigen::MatrixXd x;
  std::vector<double> w, y;
};

const GramInput& gram_input(std::int64_t rows) {
  static std::map<std::int64_t, GramInput> cache;
  auto it = cache.find(rows);
  if (it != cache.end()) return it->second;
  Rng rng(1);
  GramInput in;
  in.x.resize(rows, 40);
  for (Eigen::Index i = 0; i < in.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < in.x.cols(); ++j) in.x(i, j) = rng.normal();
  }
  in.w.resize(static_cast<std::size_t>(rows));
  in.y.resize(static_cast<std::size_t>(rows));
  for (std::size_t i = 0; i < in.w.size(); ++i) {
    in.w[i] = rng.uniform();
    in.y[i] = rng.normal();
  }
  return cache.emplace(rows, std::move(in)).first->second;
}

const Dataset& census(std::size_t rows) {
  static std::map<std::size_t, Dataset> cache;
  auto it = cache.find(rows);
  if (it != cache.end()) return it->second;
  ToyCensusSpec spec;
  spec.n_rows = rows;
  spec.seed = 3;
  return cache.emplace(rows, generate_toy_census(spec).data).first->second;
}

void BM_Gram(benchmark::State& state) {
  const auto& in = gram_input(state.range(0));
  const Execution exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_gram(in.x, in.w, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Crossprod(benchmark::State& state) {
  const auto& in = gram_input(state.range(0));
  const Execution exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_crossprod(in.x, in.w, in.y, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CountCells(benchmark::State& state) {
  Rng rng(2);
  std::vector<std::int32_t> cells(static_cast<std::size_t>(state.range(0)));
  for (auto& c : cells) c = static_cast<std::int32_t>(rng.index(600));
  const Execution exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(count_cells(cells, 600, exec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_CrossTabulate(benchmark::State& state) {
  const Dataset& d = census(static_cast<std::size_t>(state.range(0)));
  const std::vector<std::string> vars = {"occ", "age", "region"};
  const Execution exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(cross_tabulate(d, d, vars, 5, exec));
}

void BM_CartSplitSearch(benchmark::State& state) {
  const Dataset& d = census(static_cast<std::size_t>(state.range(0)));
  const Dataset preds = d.select(std::vector<std::string>{"region", "sex", "age", "relat", "occ", "servants"});
  const Column& target = d.column("mar");
  const Execution exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(fit_cart(target, preds, {}, exec));
}

void BM_StratifiedSynthesis(benchmark::State& state) {
  const Dataset& d = census(static_cast<std::size_t>(state.range(0)));
  SynthesisPlan plan;
  plan.visit_sequence = {"sex", "age", "mar", "relat", "pperroom"};
  plan.stratifier = "region";
  plan.seed = 5;
  const SynthesisOptions opts{exec_of(state)};
  for (auto _ : state) benchmark::DoNotOptimize(synthesize(d, plan, opts));
}

}  // namespace

BENCHMARK(BM_Gram)->ArgsProduct({{10000, 200000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Crossprod)->ArgsProduct({{10000, 200000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountCells)->ArgsProduct({{100000, 2000000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossTabulate)->ArgsProduct({{100000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CartSplitSearch)->ArgsProduct({{20000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StratifiedSynthesis)->ArgsProduct({{20000}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
