#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "qkernel/eval.hpp"
#include "qkernel/featuremap.hpp"
#include "qkernel/kernel.hpp"
#include "qkernel/statevector.hpp"
#include "qkernel/svm.hpp"

using namespace qkernel;

namespace {

std::vector<FeatureVector> random_vectors(int count, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<FeatureVector> out;
    for (int i = 0; i < count; ++i) {
        std::vector<double> x(static_cast<std::size_t>(n));
        for (double& v : x) v = u(rng);
        out.emplace_back(std::move(x));
    }
    return out;
}

void BM_ApplyRy(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    StateVector psi(n);
    for (auto _ : state) {
        psi.apply_ry(n / 2, 0.3);
        benchmark::DoNotOptimize(psi[0]);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(psi.dimension()));
}
BENCHMARK(BM_ApplyRy)->DenseRange(8, 20, 4);

void BM_ApplyCnot(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    StateVector psi(n);
    psi.apply_h(0);
    for (auto _ : state) {
        psi.apply_cnot(0, n - 1);
        benchmark::DoNotOptimize(psi[0]);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(psi.dimension()));
}
BENCHMARK(BM_ApplyCnot)->DenseRange(8, 20, 4);

void BM_Encode(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto x = random_vectors(1, n, 7).front();
    const FeatureMapConfig cfg{n, 3, 2};
    for (auto _ : state) {
        benchmark::DoNotOptimize(encode(x, cfg));
    }
}
BENCHMARK(BM_Encode)->DenseRange(4, 16, 4)->Unit(benchmark::kMicrosecond);

void BM_ExactGram(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int events = static_cast<int>(state.range(1));
    const auto X = random_vectors(events, n, 11);
    GramOptions options;
    options.threads = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(gram_matrix(X, KernelSpec{}, {n, 3, 2}, options));
    }
}
BENCHMARK(BM_ExactGram)->Args({4, 200})->Args({8, 200})->Args({12, 100})->Args({15, 100})
    ->Unit(benchmark::kMillisecond);

void BM_SampledKernel(benchmark::State& state) {
    const auto X = random_vectors(2, 8, 13);
    const FeatureMapConfig cfg{8, 3, 2};
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernel_sampled(X[0], X[1], cfg, 8192, ++seed));
    }
}
BENCHMARK(BM_SampledKernel)->Unit(benchmark::kMicrosecond);

void BM_SmoTrain(benchmark::State& state) {
    const int events = static_cast<int>(state.range(0));
    const auto X = random_vectors(events, 8, 17);
    KernelSpec rbf;
    rbf.kind = KernelKind::Rbf;
    rbf.gamma = 0.5;
    const GramMatrix K = gram_matrix(X, rbf, {8, 3, 2});
    std::vector<int> y(static_cast<std::size_t>(events));
    for (int i = 0; i < events; ++i) y[static_cast<std::size_t>(i)] = X[static_cast<std::size_t>(i)][0] > 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train(K, y, 10.0));
    }
}
BENCHMARK(BM_SmoTrain)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(19);
    std::normal_distribution<double> normal;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(i % 2);
        scores[i] = normal(rng) + labels[i];
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(auc(scores, labels));
    }
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
