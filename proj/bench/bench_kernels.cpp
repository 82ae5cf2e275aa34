// Serial reference against the OpenMP paths: GLR enumeration and the
// channel loop of the Monte Carlo experiment.
#include <benchmark/benchmark.h>

#include "hdf/config.hpp"

using namespace hdf;

namespace {

struct GlrFixture {
    CMat He;
    RVec gains;
    TargetGrid grid;
    CVec y;

    explicit GlrFixture(int k)
    {
        ScenarioConfig c = ScenarioConfig::paper();
        c.sensors = k;
        const Scenario s = c.build_scenario();
        gains = s.tx_gains();
        Rng rng = make_rng(c.seed, stream::kChannel, 0);
        const auto ch = draw_channel(s.field.positions, s.rhs, s.feeds, s.link, rng);
        He = effective_channel(ch.G, RVec::Zero(static_cast<Eigen::Index>(s.rhs.size())), ch.H);
        grid = TargetGrid::build(s.field, s.sensing, s.area);
        y = sample_received(He, gains, sample_decisions(grid.rho1[12], rng), s.sigma_w2, rng);
    }
};

void BM_GlrSerial(benchmark::State& state)
{
    const GlrFixture f(static_cast<int>(state.range(0)));
    const GlrKernel glr(f.He, f.gains, 1e-5, f.grid);
    for (auto _ : state) benchmark::DoNotOptimize(glr.evaluate_serial(f.y));
}

void BM_GlrParallel(benchmark::State& state)
{
    const GlrFixture f(static_cast<int>(state.range(0)));
    const GlrKernel glr(f.He, f.gains, 1e-5, f.grid);
    for (auto _ : state) benchmark::DoNotOptimize(glr(f.y));
}

void experiment(benchmark::State& state, Execution exec)
{
    ScenarioConfig c = ScenarioConfig::desk();
    c.n_channels = 8;
    c.n_trials = 100;
    c.rules = {RuleId::EFuC0, RuleId::BFuC0, RuleId::IS, RuleId::GLR};
    const ExperimentConfig cfg = c.experiment();
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg, exec));
}

void BM_ExperimentSerial(benchmark::State& state) { experiment(state, Execution::Serial); }
void BM_ExperimentParallel(benchmark::State& state) { experiment(state, Execution::Parallel); }

} // namespace

BENCHMARK(BM_GlrSerial)->DenseRange(10, 16, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GlrParallel)->DenseRange(10, 16, 2)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ExperimentSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExperimentParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
