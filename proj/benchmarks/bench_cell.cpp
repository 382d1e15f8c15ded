#include <benchmark/benchmark.h>

#include "homlab/cell.hpp"

using namespace homlab;

static void CellCorrectors(benchmark::State& state) {
    auto field = laminate_field(2, 2.0, 1.0);
    const int N = static_cast<int>(state.range(0));
    UnitCellGrid grid(2, N);
    for (auto _ : state) {
        auto cs = solve_correctors(field, grid);
        benchmark::DoNotOptimize(cs.chi[0].sum());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(CellCorrectors)->RangeMultiplier(2)->Range(32, 256)->Complexity()->Unit(benchmark::kMillisecond);

static void FluxCorrectorsFFT(benchmark::State& state) {
    auto field = laminate_field(2, 2.0, 1.0);
    const int N = static_cast<int>(state.range(0));
    UnitCellGrid grid(2, N);
    auto cs = solve_correctors(field, grid);
    auto A_hat = homogenize(field, cs);
    auto b = flux_density(field, cs, A_hat);
    for (auto _ : state) {
        auto fr = solve_flux_correctors(b, grid, 1);
        benchmark::DoNotOptimize(fr.div_residual);
    }
}
BENCHMARK(FluxCorrectorsFFT)->RangeMultiplier(2)->Range(64, 256)->Unit(benchmark::kMillisecond);

static void Homogenize(benchmark::State& state) {
    auto field = trig_field(2, 2.0, 0.5);
    const int N = static_cast<int>(state.range(0));
    UnitCellGrid grid(2, N);
    auto cs = solve_correctors(field, grid);
    for (auto _ : state) {
        auto A_hat = homogenize(field, cs);
        benchmark::DoNotOptimize(A_hat(0, 0));
    }
}
BENCHMARK(Homogenize)->Arg(128)->Unit(benchmark::kMillisecond);
