#include <benchmark/benchmark.h>

#include "hsynth/catalog.hpp"
#include "hsynth/config.hpp"
#include "hsynth/dynamics.hpp"
#include "hsynth/engine.hpp"
#include "hsynth/queries.hpp"

using namespace hsynth;

namespace {

GeneratorConfig bench_config(int horizon) {
    GeneratorConfig cfg;
    cfg.users = 4;
    cfg.root_seed = 3;
    cfg.horizon_min = cfg.horizon_max = horizon;
    return cfg;
}

void BM_KernelEval(benchmark::State& state) {
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval_kernel(10.0, 40.0, 5.0, 12.0, t));
        t = t > 60.0 ? 0.0 : t + 0.37;
    }
}
BENCHMARK(BM_KernelEval);

void BM_GenerateUser(benchmark::State& state) {
    const Generator gen(bench_config(static_cast<int>(state.range(0))), builtin_catalogs());
    const auto user = gen.cohort().front();
    for (auto _ : state) benchmark::DoNotOptimize(gen.generate_user(user));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GenerateUser)->Arg(365)->Arg(730)->Arg(1813)->Unit(benchmark::kMillisecond);

void BM_GenerateQueries(benchmark::State& state) {
    const Generator gen(bench_config(730), builtin_catalogs());
    const auto bundle = gen.generate_user(gen.cohort().front());
    QueryOptions opt;
    opt.per_dimension = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(generate_queries(bundle, opt));
}
BENCHMARK(BM_GenerateQueries)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_Counterfactual(benchmark::State& state) {
    const Generator gen(bench_config(730), builtin_catalogs());
    const auto bundle = gen.generate_user(gen.cohort().front());
    const std::string id = bundle.events.at(bundle.events.size() / 2).event_id;
    for (auto _ : state) benchmark::DoNotOptimize(resimulate_without(bundle, id));
}
BENCHMARK(BM_Counterfactual)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
