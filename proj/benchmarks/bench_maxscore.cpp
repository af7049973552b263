#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "maxscore/instruments.hpp"
#include "maxscore/lrt.hpp"
#include "maxscore/rng.hpp"
#include "maxscore/teststat.hpp"

namespace {

using namespace maxscore;

Eigen::MatrixXd bench_x(int n, int k) {
    auto eng = substream(99, 0);
    std::normal_distribution<double> norm(0.0, 1.0);
    Eigen::MatrixXd x(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) x(i, j) = norm(eng) + (j == k - 1 ? 1.0 : 0.0);
    return x;
}

ParamPoint bench_b() {
    Eigen::VectorXd b(2);
    b << 1.0, 1.0;
    return ParamPoint(b);
}

} // namespace

static void BM_StatisticEval(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd x = bench_x(n, 2);
    const CellSet cells = build_cells(x, bench_b(), build_instruments_2d(x));
    auto eng = substream(7, 1);
    const auto bits = rademacher_words(eng, n);
    for (auto _ : state) benchmark::DoNotOptimize(cells.statistic(bits, kDefaultEpsilon));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(cells.cells.size()));
}
BENCHMARK(BM_StatisticEval)->Arg(100)->Arg(500)->Arg(2000);

static void BM_SimulateQuantile(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd x = bench_x(n, 2);
    const InstrumentSets inst = build_instruments_2d(x);
    const ParamPoint b = bench_b();
    TestConfig cfg;
    cfg.n_draws = 500;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_quantile(x, b, inst, cfg, 1).q);
}
BENCHMARK(BM_SimulateQuantile)->Arg(50)->Arg(100)->Arg(200);

static void BM_BuildInstruments2d(benchmark::State& state) {
    const Eigen::MatrixXd x = bench_x(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(build_instruments_2d(x).v_upper.size());
}
BENCHMARK(BM_BuildInstruments2d)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_EnumerateCells3d(benchmark::State& state) {
    const Eigen::MatrixXd x = bench_x(static_cast<int>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(enumerate_cells(x).witnesses.size());
}
BENCHMARK(BM_EnumerateCells3d)->Arg(8)->Arg(12)->Arg(16);

static void BM_LrtCalibrate(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    // Distinct misaligned probabilities keep the support from collapsing, so
    // the exact distribution really has ~2^n atoms before merging.
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd alt(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = 1.0;
        alt[i] = 0.05 + 0.4 * static_cast<double>(i) / static_cast<double>(n);
    }
    Eigen::VectorXd b(2);
    b << 1.0, 0.0;
    LrtSpec spec(least_favorable(CondProbs(alt), x, ParamPoint(b)), CondProbs(alt));
    spec.mode = LrtMode::randomized;
    for (auto _ : state) benchmark::DoNotOptimize(calibrate(spec).k);
}
BENCHMARK(BM_LrtCalibrate)->Arg(10)->Arg(14)->Arg(18);

BENCHMARK_MAIN();
