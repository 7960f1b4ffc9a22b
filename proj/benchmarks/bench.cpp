#include <benchmark/benchmark.h>

#include "autodml/bg.hpp"
#include "autodml/fit.hpp"
#include "autodml/problems.hpp"
#include "autodml/riesz.hpp"
#include "autodml/simulate.hpp"

namespace {

using namespace autodml;

void BM_BgLogDerivatives(benchmark::State& state) {
  const int t = static_cast<int>(state.range(0));
  double a = 0.3, b = -0.2;
  for (auto _ : state) {
    BgDerivs d = bg_log_derivatives(a, b, t);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_BgLogDerivatives)->Arg(1)->Arg(6)->Arg(12)->Arg(60);

Dataset make_cate_data(std::size_t n) {
  DgpSpec spec;
  spec.kind = DgpSpec::Kind::cate_rlearner;
  spec.n = n;
  return gen_dataset(spec, 7);
}

void BM_RieszAssembly(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cate_data(n);
  CrossFitPlan plan = make_folds(n, 5, 11);
  ProblemSpec problem = make_problem("ate_rlearner", data, {});
  FoldFits fits = cross_fit_nuisances(data, plan, problem);
  auto rows = all_rows(data);
  for (auto _ : state) {
    RieszSystem sys =
        assemble_riesz_system(fits.loss_binding(plan), fits.theta_binding(plan),
                              problem.functional, problem.alpha_space, data, rows);
    benchmark::DoNotOptimize(sys);
  }
}
BENCHMARK(BM_RieszAssembly)->Arg(500)->Arg(2000);

void BM_RlearnerCrossFit(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Dataset data = make_cate_data(n);
  CrossFitPlan plan = make_folds(n, 5, 11);
  ProblemSpec problem = make_problem("ate_rlearner", data, {});
  for (auto _ : state) {
    FoldFits fits = cross_fit_nuisances(data, plan, problem);
    benchmark::DoNotOptimize(fits);
  }
}
BENCHMARK(BM_RlearnerCrossFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_BgFit(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  DgpSpec spec;
  spec.kind = DgpSpec::Kind::beta_geometric;
  spec.n = n;
  Dataset data = gen_dataset(spec, 7);
  ProblemSpec problem = make_problem("bg_survival", data, {});
  auto rows = all_rows(data);
  for (auto _ : state) {
    FittedFunction f = fit_erm(problem.loss, problem.theta_space, data, rows, problem.fit);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_BgFit)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
