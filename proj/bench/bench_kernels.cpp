#include "rmdp/experiments.hpp"
#include "rmdp/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace rmdp;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

template <Exec E>
void BM_QBackup(benchmark::State& state) {
    const auto S = static_cast<std::size_t>(state.range(0));
    const TabularMdp mdp = generate_random_mdp(S, 4, 1.0, 3);
    const auto v = random_vector(S, 5);
    std::vector<double> q(S * 4);
    for (auto _ : state) {
        kernels::q_backup(E, mdp, v, q);
        benchmark::DoNotOptimize(q.data());
    }
}

template <Exec E>
void BM_GreedyRows(benchmark::State& state) {
    const auto S = static_cast<std::size_t>(state.range(0));
    constexpr std::size_t A = 8;
    const Regularizer reg = state.range(1) == 0 ? Regularizer::shifted_entropy() : Regularizer::tsallis(1.5);
    const auto q = random_vector(S * A, 9);
    std::vector<double> probs(S * A), values(S);
    for (auto _ : state) {
        kernels::greedy_rows(E, reg, q, A, 0.3, probs, values, 1e-10, 100000);
        benchmark::DoNotOptimize(probs.data());
    }
}

template <Exec E>
void BM_ProjectRows(benchmark::State& state) {
    const auto S = static_cast<std::size_t>(state.range(0));
    constexpr std::size_t A = 16;
    const auto y = random_vector(S * A, 11);
    std::vector<double> out(S * A);
    for (auto _ : state) {
        kernels::project_rows(E, y, A, 1e-6, out);
        benchmark::DoNotOptimize(out.data());
    }
}

} // namespace

BENCHMARK(BM_QBackup<Exec::serial>)->Arg(256)->Arg(1024);
BENCHMARK(BM_QBackup<Exec::parallel>)->Arg(256)->Arg(1024);
BENCHMARK(BM_GreedyRows<Exec::serial>)->Args({4096, 0})->Args({1024, 1});
BENCHMARK(BM_GreedyRows<Exec::parallel>)->Args({4096, 0})->Args({1024, 1});
BENCHMARK(BM_ProjectRows<Exec::serial>)->Arg(16384);
BENCHMARK(BM_ProjectRows<Exec::parallel>)->Arg(16384);

BENCHMARK_MAIN();
