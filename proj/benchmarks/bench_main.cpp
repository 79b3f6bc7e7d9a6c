#include <benchmark/benchmark.h>

#include "convbasis/convbasis.hpp"

using namespace convbasis;

namespace {

void BM_ConvMatvecNaive(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Vector a = random_vector(n, 1), x = random_vector(n, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(conv_matvec_naive(a, x));
    state.SetComplexityN(state.range(0));
}

void BM_ConvMatvecFft(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Vector a = random_vector(n, 1), x = random_vector(n, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(conv_matvec(a, x));
    state.SetComplexityN(state.range(0));
}

AttentionInput separated_input(std::size_t n, std::size_t d) {
    const auto inst = separated_conv_instance(n, 4, 1, 1.0, 3, {0.1, true, 1000});
    return {inst.Q, inst.K, random_matrix(n, d, 4)};
}

void BM_AttentionNaive(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto in = separated_input(n, 4);
    const auto mask = MaskSpec::causal(n);
    for (auto _ : state)
        benchmark::DoNotOptimize(naive_masked_attention(in, mask));
}

void BM_AttentionConvForward(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto in = separated_input(n, 4);
    const NonDegenSpec params{4, 1, 1.0, 0.0};
    for (auto _ : state)
        benchmark::DoNotOptimize(conv_forward(in, params));
}

void BM_CausalLowRank(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const LowRankFactors f{random_matrix(n, 8, 1), random_matrix(n, 8, 2)};
    const Vector v = random_vector(n, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(causal_matvec(f, v));
    state.SetComplexityN(state.range(0));
}

void BM_ContinuousLowRank(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const LowRankFactors f{random_matrix(n, 8, 1), random_matrix(n, 8, 2)};
    const Vector v = random_vector(n, 3);
    std::vector<std::size_t> s(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = i / 2;
        t[i] = i;
    }
    const auto mask = MaskSpec::continuous_row(s, t);
    for (auto _ : state)
        benchmark::DoNotOptimize(continuous_matvec(f, mask, v));
}

} // namespace

BENCHMARK(BM_ConvMatvecNaive)->RangeMultiplier(2)->Range(1 << 10, 1 << 14)->Complexity();
BENCHMARK(BM_ConvMatvecFft)->RangeMultiplier(2)->Range(1 << 10, 1 << 14)->Complexity();
BENCHMARK(BM_AttentionNaive)->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_AttentionConvForward)->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_CausalLowRank)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity();
BENCHMARK(BM_ContinuousLowRank)->RangeMultiplier(4)->Range(1 << 10, 1 << 16);
BENCHMARK_MAIN();
