// Copyright (C) 2026 the adaspark authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <cmath>

#include "adaspark/dense_reference.hpp"
#include "adaspark/harness.hpp"
#include "adaspark/rng.hpp"

namespace {

using namespace adaspark;

struct Bench {
    SequenceState state;
    LayerWeights weights;
    AttentionConfig attn;
    FfnConfig ffn;
};

Bench make_bench(double p) {
    RunConfig config;
    config.seed = 1234;
    config.grid = {8, 8, 8};  // 512 vision tokens in 64-token cubes
    config.cube = {4, 4, 4};
    config.num_text_tokens = 16;
    config.d_model = 64;
    config.d_ff = 256;
    config.num_heads = 4;
    config.strategy = SelectionStrategy::top_p(p);
    Bench b{make_workload(config), LayerWeights::seeded(64, 256, 99),
            config.attention_config(), config.ffn_config()};
    return b;
}

void BM_SparseAttend(benchmark::State& state) {
    const Bench b = make_bench(static_cast<double>(state.range(0)) / 10.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sparse_attend(b.state, b.weights, b.attn));
    }
}
BENCHMARK(BM_SparseAttend)->Arg(3)->Arg(7)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_DenseAttend(benchmark::State& state) {
    const Bench b = make_bench(1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dense_attend(b.state, b.weights, b.attn));
    }
}
BENCHMARK(BM_DenseAttend)->Unit(benchmark::kMillisecond);

void BM_SparseFfn(benchmark::State& state) {
    const Bench b = make_bench(static_cast<double>(state.range(0)) / 10.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sparse_ffn(b.state, b.weights, b.ffn));
    }
}
BENCHMARK(BM_SparseFfn)->Arg(3)->Arg(7)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_DenseFfn(benchmark::State& state) {
    const Bench b = make_bench(1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dense_ffn(b.state, b.weights, b.ffn));
    }
}
BENCHMARK(BM_DenseFfn)->Unit(benchmark::kMillisecond);

void BM_TopP(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    GaussianStream g(5);
    SelectionDistribution dist;
    dist.probs.resize(n);
    double sum = 0.0;
    for (double& v : dist.probs) {
        v = std::exp(g.next());
        sum += v;
    }
    for (double& v : dist.probs) {
        v /= sum;
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(top_p(dist, 0.7));
    }
}
BENCHMARK(BM_TopP)->Arg(8)->Arg(64)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
