// Hot paths of the Monte Carlo study: simulation, Gram construction, one
// BIC path and the companion eigenvalue check. Sizes follow the n = T cells.

#include <hdvar/dgp.hpp>
#include <hdvar/lasso.hpp>
#include <hdvar/theory_bounds.hpp>
#include <hdvar/var_model.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace hdvar;

void BM_SimulateTable1(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const DesignPair d = build_table1_design(T, 1);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    TimeSeriesPanel p = simulate(d.spec, d.innov, T + 1, default_burn_in(4), seed++);
    benchmark::DoNotOptimize(p.data.data());
  }
  state.SetItemsProcessed(state.iterations() * (T + 1 + default_burn_in(4)));
}
BENCHMARK(BM_SimulateTable1)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_GramCache(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const DesignPair d = build_table1_design(T, 1);
  const DesignMatrices design = build_design(simulate(d.spec, d.innov, T, 240, 3), 4);
  for (auto _ : state) {
    GramCache g = make_gram_cache(design);
    benchmark::DoNotOptimize(g.G.data());
  }
}
BENCHMARK(BM_GramCache)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_BicPathOneEquation(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const DesignPair d = build_table1_design(T, 1);
  const DesignMatrices design = build_design(simulate(d.spec, d.innov, T, 240, 3), 4);
  const GramCache g = make_gram_cache(design);
  for (auto _ : state) {
    RegularizationPath path = compute_path(design, g, 0);
    benchmark::DoNotOptimize(path.bic.data());
  }
}
BENCHMARK(BM_BicPathOneEquation)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_FitAllEquations(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  const DesignPair d = build_table1_design(T, 1);
  const DesignMatrices design = build_design(simulate(d.spec, d.innov, T, 240, 3), 4);
  for (auto _ : state) {
    LassoFit fit = fit_all_equations(design, PenaltyStrategy::bic(), LassoOptions{}, 1);
    benchmark::DoNotOptimize(fit.beta.data());
  }
}
BENCHMARK(BM_FitAllEquations)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_CompanionStability(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DesignPair d = build_block_design(n);
  for (auto _ : state) benchmark::DoNotOptimize(is_stable(d.spec).spectral_radius);
}
BENCHMARK(BM_CompanionStability)->Arg(100)->Arg(900)->Unit(benchmark::kMillisecond);

void BM_PopulationGram(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DesignPair d = build_block_design(n, SimulationDesign{5, 0.15, -0.1, 2, 1e-5, 0.8});
  const Matrix sigma = stationary_innovation_covariance(d.innov);
  for (auto _ : state) {
    Matrix g = population_gram(d.spec, sigma, 2);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_PopulationGram)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
