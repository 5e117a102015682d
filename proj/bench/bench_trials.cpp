// Serial reference versus OpenMP for the two parallel kernels: trial-level
// scenario runs and the batch feature matrix.

#include <benchmark/benchmark.h>

#include <vector>

#include "lmprl/harness.hpp"

using namespace lmprl;

namespace {

RunSpec bench_spec() {
    RunSpec spec = full_scale_spec();
    spec.experiment.order = 20;
    spec.experiment.total_steps = 1000;
    spec.experiment.change_step = 500;
    spec.trials = 8;
    spec.dump_rff = false;
    spec.methods.resize(2); // agent and p = 1
    return spec;
}

std::vector<StateAction> bench_points(std::size_t n) {
    Rng rng = make_rng(3);
    std::normal_distribution<double> d;
    std::vector<StateAction> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back({{d(rng), d(rng), d(rng), d(rng)}, 1.5});
    return pts;
}

void BM_ScenarioSerial(benchmark::State& state) {
    const RunSpec spec = bench_spec();
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(spec, 0, Execution::serial).mean_db.sum());
}

void BM_ScenarioParallel(benchmark::State& state) {
    const RunSpec spec = bench_spec();
    for (auto _ : state) benchmark::DoNotOptimize(run_scenario(spec, 0, Execution::parallel).mean_db.sum());
}

void BM_FeatureMatrixSerial(benchmark::State& state) {
    const RffMap map = RffMap::draw(300, 1.0, 1);
    const auto pts = bench_points(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(feature_matrix_serial(map, pts).data());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FeatureMatrixParallel(benchmark::State& state) {
    const RffMap map = RffMap::draw(300, 1.0, 1);
    const auto pts = bench_points(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(feature_matrix(map, pts).data());
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(BM_ScenarioSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ScenarioParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FeatureMatrixSerial)->Arg(1000)->Arg(10000)->UseRealTime();
BENCHMARK(BM_FeatureMatrixParallel)->Arg(1000)->Arg(10000)->UseRealTime();

BENCHMARK_MAIN();
