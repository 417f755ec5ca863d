// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include <random>

#include "mmdcp/conformal.hpp"
#include "mmdcp/datagen.hpp"
#include "mmdcp/scoring.hpp"

namespace {

using namespace mmdcp;

struct Fixture {
    LabeledDataset train;
    TestBatch test;
    ClassSummary summary;

    Fixture(std::size_t p, std::size_t n) {
        auto cfg = ScenarioConfig::one_class_defaults();
        cfg.p = p;
        cfg.n_k = n;
        cfg.m = n;
        std::tie(train, test) = generate(cfg);
        summary = fit_class_summary(train, 1);
    }
};

const Fixture& fixture(std::size_t p) {
    static Fixture f200(200, 1000);
    static Fixture f1000(1000, 1000);
    return p == 200 ? f200 : f1000;
}

void BM_score_batch_omp(benchmark::State& state) {
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(score_batch(f.summary, f.test.features));
}

void BM_score_batch_serial(benchmark::State& state) {
    const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(serial::score_batch(f.summary, f.test.features));
}

std::vector<double> uniform(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

void BM_pvalues_sorted(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto train = uniform(n, 1);
    const auto test = uniform(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(conformal_pvalues(train, test));
}

void BM_pvalues_serial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto train = uniform(n, 1);
    const auto test = uniform(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(serial::conformal_pvalues(train, test));
}

void BM_bh_adjust(benchmark::State& state) {
    const auto p = uniform(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(bh_adjust(p));
}

void BM_predict_multi(benchmark::State& state) {
    auto cfg = ScenarioConfig::multi_class_defaults();
    cfg.p = static_cast<std::size_t>(state.range(0));
    cfg.n_k = 200;
    cfg.rho = 0.8;
    const auto [train, test] = generate(cfg);
    for (auto _ : state) benchmark::DoNotOptimize(predict(train, test, 0.05));
}

}  // namespace

BENCHMARK(BM_score_batch_omp)->Arg(200)->Arg(1000);
BENCHMARK(BM_score_batch_serial)->Arg(200)->Arg(1000);
BENCHMARK(BM_pvalues_sorted)->Arg(1000)->Arg(10000);
BENCHMARK(BM_pvalues_serial)->Arg(1000)->Arg(10000);
BENCHMARK(BM_bh_adjust)->Arg(1000)->Arg(100000);
BENCHMARK(BM_predict_multi)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
