// Serial reference paths against their OpenMP counterparts.
// Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include "dualstate/bucket_panel.hpp"
#include "dualstate/dual_regression.hpp"
#include "dualstate/liquidity_lab.hpp"
#include "dualstate/pipeline.hpp"
#include "dualstate/residual_study.hpp"
#include "dualstate/state_space.hpp"
#include "dualstate/synth_market.hpp"

using namespace dualstate;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

const Market& market() {
    static const Market m = [] {
        MarketConfig mc;
        mc.n_traders = 4;
        return generate(mc);
    }();
    return m;
}

const PanelSeries& panels() {
    static const PanelSeries p = build_panels(market().tapes[0]);
    return p;
}

void BM_build_panels(benchmark::State& st) {
    (void)panels();  // keep fixture setup out of the timing
    for (auto _ : st) benchmark::DoNotOptimize(build_panels(market().tapes[0], {}, {}, exec_of(st)));
}

void BM_state_matrix(benchmark::State& st) {
    (void)panels();
    for (auto _ : st) benchmark::DoNotOptimize(state_matrix(panels(), StateMode::Imbalance, exec_of(st)));
}

void BM_fit_many(benchmark::State& st) {
    std::vector<StateMatrix> states;
    for (const auto& t : market().tapes) states.push_back(state_matrix(build_panels(t), StateMode::Imbalance));
    for (auto _ : st) benchmark::DoNotOptimize(fit_many(states, {}, exec_of(st)));
}

void BM_cost_series(benchmark::State& st) {
    (void)panels();
    for (auto _ : st) benchmark::DoNotOptimize(cost_series(panels(), exec_of(st)));
}

void BM_cnn_backcast(benchmark::State& st) {
    const auto a = residuals_of("a", analyze_tape(market().tapes[0]));
    const auto b = residuals_of("b", analyze_tape(market().tapes[1]));
    CnnOptions opt;
    opt.rounds = 10;
    opt.runs = 4;
    for (auto _ : st) benchmark::DoNotOptimize(cnn_backcast({a}, {b}, market().truth.sentiment, opt, exec_of(st)));
}

void BM_gen_tapes(benchmark::State& st) {
    MarketConfig mc;
    mc.n_traders = 4;
    const auto truth = gen_indexes(mc);
    for (auto _ : st) benchmark::DoNotOptimize(gen_tapes(mc, truth, exec_of(st)));
}

}  // namespace

BENCHMARK(BM_build_panels)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_state_matrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fit_many)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cost_series)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_cnn_backcast)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gen_tapes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
