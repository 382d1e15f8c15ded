#include <benchmark/benchmark.h>

#include "homlab/resolvent.hpp"

using namespace homlab;

namespace {

SpectralParameter shift(cplx lam) { return SpectralParameter::make(lam, 0.78539816339744831); }

} // namespace

static void AssembleOscillating(benchmark::State& state) {
    auto field = laminate_field(2, 2.0, 1.0);
    const int n = static_cast<int>(state.range(0));
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {n, n, 0});
    for (auto _ : state) {
        auto parts = assemble_parts(dom, Coefficients::oscillating(field, 16.0 / n));
        benchmark::DoNotOptimize(parts->K_ii.nonZeros());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(AssembleOscillating)->RangeMultiplier(2)->Range(128, 512)->Complexity()->Unit(benchmark::kMillisecond);

static void DstDirectSolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {n, n, 0});
    Eigen::MatrixXd aniso(2, 2);
    aniso << 1.732, 0.0, 0.0, 2.0;
    auto parts = assemble_parts(dom, Coefficients::homogenized(aniso, 2));
    DirichletSolver solver(parts, shift(cplx(-1.0, 0.3)));
    auto F = bump_source(*dom, 1);
    for (auto _ : state) {
        auto sol = solve_dirichlet(solver, RhsSpec::function(F));
        benchmark::DoNotOptimize(sol.u.values[0]);
    }
}
BENCHMARK(DstDirectSolve)->RangeMultiplier(2)->Range(128, 1024)->Unit(benchmark::kMillisecond);

static void KrylovOscillatingSolve(benchmark::State& state) {
    auto field = laminate_field(2, 2.0, 1.0);
    const int n = static_cast<int>(state.range(0));
    auto dom = DiscreteDomain::rectangle(2, {1.0, 1.0, 1.0}, {n, n, 0});
    auto parts = assemble_parts(dom, Coefficients::oscillating(field, 16.0 / n));
    SolverOptions opts;
    opts.mode = SolverOptions::Mode::krylov;
    DirichletSolver solver(parts, shift(cplx(-1.0, 0.3)), opts);
    auto F = bump_source(*dom, 1);
    for (auto _ : state) {
        auto sol = solve_dirichlet(solver, RhsSpec::function(F));
        benchmark::DoNotOptimize(sol.u.values[0]);
    }
}
BENCHMARK(KrylovOscillatingSolve)->RangeMultiplier(2)->Range(128, 512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
