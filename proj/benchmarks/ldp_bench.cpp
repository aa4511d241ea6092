#include <benchmark/benchmark.h>

#include "ldp/dynamics.hpp"
#include "ldp/perc.hpp"
#include "ldp/rng.hpp"
#include "ldp/spectral.hpp"

using namespace ldp;

namespace {

void BM_FourArm(benchmark::State& state) {
    const double eta = 1.0 / static_cast<double>(state.range(0));
    const auto lat = build_lattice(eta, {-1, 1, -1, 1});
    const SiteIndex centre = lat->index_of({0, 0});
    std::uint64_t seed = 0;
    for (auto _ : state) {
        state.PauseTiming();
        const auto cfg = sample_configuration(lat, ++seed);
        state.ResumeTiming();
        benchmark::DoNotOptimize(four_arm(cfg, centre, 0.125, 1.0));
    }
}
BENCHMARK(BM_FourArm)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Crossing(benchmark::State& state) {
    const double eta = 1.0 / static_cast<double>(state.range(0));
    const auto lat = build_lattice(eta, {0, 1, 0, 1});
    const auto quad = make_quad(*lat, lat->domain());
    const auto cfg = sample_configuration(lat, 3);
    for (auto _ : state) benchmark::DoNotOptimize(crosses(cfg, quad));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lat->size()));
}
BENCHMARK(BM_Crossing)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_WalshTransform(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    CounterRng rng(5);
    std::vector<std::int8_t> values(std::size_t{1} << n);
    for (auto& v : values) v = (rng() & 1U) ? 1 : -1;
    const auto tt = make_truth_table(n, [&](SubsetMask m) { return values[m] > 0; });
    for (auto _ : state) benchmark::DoNotOptimize(walsh_transform(tt));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(values.size()));
}
BENCHMARK(BM_WalshTransform)->Arg(10)->Arg(16)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_EventLoop(benchmark::State& state) {
    const auto lat = build_lattice(1.0 / 64, {0, 1, 0, 1});
    const auto rates = make_rates(lebesgue_measure(lat), 1e-3);
    const auto init = sample_configuration(lat, 1);
    const std::vector<RectQuad> quads{make_quad(*lat, lat->domain())};
    const std::vector<double> times{0.0, 0.5, 1.0};
    std::uint64_t seed = 0;
    std::size_t events = 0;
    for (auto _ : state) {
        const auto tr = run_dp(init, rates, 1.0, quads, times, ++seed);
        events += tr.event_count;
        benchmark::DoNotOptimize(tr.final.colors.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(events));
}
BENCHMARK(BM_EventLoop)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
