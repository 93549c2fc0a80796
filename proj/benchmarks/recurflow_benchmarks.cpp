#include <array>
#include <cmath>

#include <benchmark/benchmark.h>

#include "recurflow/funcspace.hpp"
#include "recurflow/nse2d.hpp"
#include "recurflow/recurrence.hpp"

using namespace recurflow;
using funcspace::AnalyticSignal;

namespace {

nse2d::ForcingField qp_forcing() {
    const std::array<std::array<int, 2>, 2> modes = {{{0, 1}, {1, 1}}};
    const std::array<double, 2> w = {1.0, 1.0};
    return nse2d::shear_pattern(modes, w, AnalyticSignal::quasi_periodic({0.5, 0.5}, {1.0, std::sqrt(2.0)}));
}

void BM_BilinearTerm(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    nse2d::BilinearEvaluator b(n);
    const auto u = nse2d::random_field(n, 1, n / 3);
    for (auto _ : state) benchmark::DoNotOptimize(b(u, u));
}
BENCHMARK(BM_BilinearTerm)->Arg(32)->Arg(64)->Arg(128);

void BM_SolverStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    nse2d::Solver s({1.0, n, 1e-2, true, 1.0, nse2d::Startup::heun, 0.0}, qp_forcing());
    s.reset(nse2d::random_field(n, 2, 4));
    for (auto _ : state) s.step();
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SolverStep)->Arg(32)->Arg(64)->Arg(128);

void BM_ShiftScan(benchmark::State& state) {
    const auto q = AnalyticSignal::quasi_periodic({1.0, 1.0}, {1.0, std::sqrt(2.0)});
    const double tau_max = static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            recurrence::shift_set(q, {0.1, 5.0, 0.0, tau_max, 0.01, 16, recurrence::WindowMode::two_sided}));
    }
}
BENCHMARK(BM_ShiftScan)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_CompactOpenMetric(benchmark::State& state) {
    const auto f = AnalyticSignal::periodic({1.0}, 1.0);
    const auto g = AnalyticSignal::poisson_example().translate(44.0);
    const funcspace::CompactOpenMetricParams params{static_cast<int>(state.range(0)), 64, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(funcspace::compact_open_distance(f, g, params));
}
BENCHMARK(BM_CompactOpenMetric)->Arg(5)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
