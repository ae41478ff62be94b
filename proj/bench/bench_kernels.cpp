// Parallel kernels against their serial references at sizes typical of the
// simulator (affine/matmul: a training epoch) and of retrieval (cosine).

#include <benchmark/benchmark.h>

#include "csls/kernels.hpp"
#include "csls/rng.hpp"

namespace {

using namespace csls;

Matrix random_matrix(std::size_t rows, std::size_t cols, Seed seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = rng.normal();
    return m;
}

template <auto Kernel>
void BM_affine(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix x = random_matrix(n, 16, 1);
    const Matrix w = random_matrix(20, 16, 2);
    const std::vector<double> b(20, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(x, w, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <auto Kernel>
void BM_matmul_tn(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix g = random_matrix(n, 20, 3);
    const Matrix x = random_matrix(n, 16, 4);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(g, x));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <void (*Kernel)(Matrix&)>
void BM_softmax(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix z = random_matrix(n, 20, 5);
    for (auto _ : state) {
        Matrix m = z;
        Kernel(m);
        benchmark::DoNotOptimize(m);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <auto Kernel>
void BM_cosine(benchmark::State& state) {
    const auto p = static_cast<std::size_t>(state.range(0));
    const Matrix pool = random_matrix(p, 16, 6);
    const Matrix queries = random_matrix(32, 16, 7);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(queries, pool));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p));
}

}  // namespace

BENCHMARK(BM_affine<kernels::affine_nt>)->Name("affine_nt/parallel")->Arg(1000)->Arg(8000)->Arg(64000);
BENCHMARK(BM_affine<kernels::reference::affine_nt>)->Name("affine_nt/reference")->Arg(1000)->Arg(8000)->Arg(64000);
BENCHMARK(BM_matmul_tn<kernels::matmul_tn>)->Name("matmul_tn/parallel")->Arg(1000)->Arg(8000)->Arg(64000);
BENCHMARK(BM_matmul_tn<kernels::reference::matmul_tn>)->Name("matmul_tn/reference")->Arg(1000)->Arg(8000)->Arg(64000);
BENCHMARK(BM_softmax<kernels::softmax_rows>)->Name("softmax_rows/parallel")->Arg(1000)->Arg(8000)->Arg(64000);
BENCHMARK(BM_softmax<kernels::reference::softmax_rows>)->Name("softmax_rows/reference")->Arg(1000)->Arg(8000)->Arg(64000);
BENCHMARK(BM_cosine<kernels::cosine_scores>)->Name("cosine_scores/parallel")->Arg(4000)->Arg(32000);
BENCHMARK(BM_cosine<kernels::reference::cosine_scores>)->Name("cosine_scores/reference")->Arg(4000)->Arg(32000);

BENCHMARK_MAIN();
