// Serial direct-sum transforms against the separated OpenMP transforms.

#include "equivar/grids.hpp"
#include "equivar/spectral_conv.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace equivar;

namespace {

SpectralS2Signal s2_signal(int L) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    auto s = SpectralS2Signal::zeros(L, 1);
    for (auto& v : s.coeffs) v = {n(rng), n(rng)};
    return s;
}

SpectralSO3Signal so3_signal(int L) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    auto s = SpectralSO3Signal::zeros(L, 1);
    for (auto& v : s.coeffs) v = {n(rng), n(rng)};
    return s;
}

void BM_S2SynthesisReference(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const S2Grid g(L);
    const auto f = s2_signal(L);
    for (auto _ : state) benchmark::DoNotOptimize(reference::s2_synthesis(f, g));
}

void BM_S2Synthesis(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const S2Grid g(L);
    const auto f = s2_signal(L);
    for (auto _ : state) benchmark::DoNotOptimize(s2_synthesis(f, g));
}

void BM_S2AnalysisReference(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const S2Grid g(L);
    const auto s = s2_synthesis(s2_signal(L), g);
    for (auto _ : state) benchmark::DoNotOptimize(reference::s2_analysis(g, s));
}

void BM_S2Analysis(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const S2Grid g(L);
    const auto s = s2_synthesis(s2_signal(L), g);
    for (auto _ : state) benchmark::DoNotOptimize(s2_analysis(g, s));
}

void BM_SO3SynthesisReference(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const SO3Grid g(L);
    const auto f = so3_signal(L);
    for (auto _ : state) benchmark::DoNotOptimize(reference::so3_synthesis(f, g));
}

void BM_SO3Synthesis(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const SO3Grid g(L);
    const auto f = so3_signal(L);
    for (auto _ : state) benchmark::DoNotOptimize(so3_synthesis(f, g));
}

void BM_SO3AnalysisReference(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const SO3Grid g(L);
    const auto s = so3_synthesis(so3_signal(L), g);
    for (auto _ : state) benchmark::DoNotOptimize(reference::so3_analysis(g, s));
}

void BM_SO3Analysis(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const SO3Grid g(L);
    const auto s = so3_synthesis(so3_signal(L), g);
    for (auto _ : state) benchmark::DoNotOptimize(so3_analysis(g, s));
}

void BM_S2ScalarConv(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const auto f = s2_signal(L);
    auto k = KernelS2::zeros(L, 4, 1);
    for (auto& v : k.coeffs) v = 0.5;
    for (auto _ : state) benchmark::DoNotOptimize(s2_conv_scalar(k, f));
}

}  // namespace

BENCHMARK(BM_S2SynthesisReference)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK(BM_S2Synthesis)->Arg(8)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_S2AnalysisReference)->Arg(8)->Arg(16)->Arg(32);
BENCHMARK(BM_S2Analysis)->Arg(8)->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_SO3SynthesisReference)->Arg(4)->Arg(8);
BENCHMARK(BM_SO3Synthesis)->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_SO3AnalysisReference)->Arg(4)->Arg(8);
BENCHMARK(BM_SO3Analysis)->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_S2ScalarConv)->Arg(8)->Arg(16)->Arg(32);

BENCHMARK_MAIN();
