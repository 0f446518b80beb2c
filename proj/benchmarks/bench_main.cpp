#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lsvpm/analytic.hpp"
#include "lsvpm/engine.hpp"
#include "lsvpm/kernel.hpp"
#include "lsvpm/surface.hpp"

using namespace lsvpm;

namespace {

struct Cloud {
    std::vector<double> xs, g2;
};

// Spot-like particles around 100 with variance-like weights.
Cloud cloud(std::size_t n) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    Cloud c;
    for (std::size_t i = 0; i < n; ++i) {
        c.xs.push_back(100.0 * std::exp(0.12 * z(rng)));
        c.g2.push_back(0.01 * std::exp(0.5 * z(rng)));
    }
    return c;
}

void kernel_ratios(benchmark::State& state, KernelBackend backend) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto c = cloud(n);
    const KernelEstimator est(c.xs, c.g2, {KernelFamily::Gaussian, amise_bandwidth(100.0, n), 1e-5});
    for (auto _ : state) benchmark::DoNotOptimize(est.ratios(c.xs, backend));
    state.SetComplexityN(state.range(0));
}

void BM_KernelNaive(benchmark::State& state) { kernel_ratios(state, KernelBackend::Naive); }
void BM_KernelBinned(benchmark::State& state) { kernel_ratios(state, KernelBackend::Binned); }

void BM_HestonCall(benchmark::State& state) {
    const auto p = HestonParams::market();
    double k = 80.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(heston_call(p, k, 0.5));
        k = k >= 120.0 ? 80.0 : k + 1.0;
    }
}

void BM_MarketSurface(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_market_surface(HestonParams::market(), default_maturities(), default_strikes()));
    }
}

// One calibrated Euler step per iteration, the unit cost of every study.
void BM_HestonLsvStep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const KernelSpec k{KernelFamily::Gaussian, amise_bandwidth(100.0, n), 1e-5};
    const auto lv = LocalVolFn::flat(0.12);
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_heston_lsv(lv, k, HestonParams::modified(), SimGrid{0.02, 2, n, 1}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

}  // namespace

BENCHMARK(BM_KernelNaive)->RangeMultiplier(4)->Range(256, 4096)->Complexity();
BENCHMARK(BM_KernelBinned)->RangeMultiplier(4)->Range(256, 65536)->Complexity();
BENCHMARK(BM_HestonCall);
BENCHMARK(BM_MarketSurface)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HestonLsvStep)->RangeMultiplier(4)->Range(1024, 65536)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
