#include <benchmark/benchmark.h>

#include "selflabel/kernels.hpp"
#include "selflabel/rng.hpp"

using namespace selflabel;

namespace {

DenseMatrix random_matrix(std::uint64_t seed, std::size_t r, std::size_t c) {
  Rng rng(seed);
  return sample_gaussian(rng, r, c);
}

void bm_gemm_nn_omp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DenseMatrix a = random_matrix(1, n, n), b = random_matrix(2, n, n), c(n, n);
  for (auto _ : state) {
    c = kernels::gemm_nn(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

void bm_gemm_nn_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DenseMatrix a = random_matrix(1, n, n), b = random_matrix(2, n, n), c(n, n);
  for (auto _ : state) {
    c = ref::gemm_nn(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n * n);
}

void bm_gemm_nt_omp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DenseMatrix a = random_matrix(1, n, n), b = random_matrix(2, n, n), c(n, n);
  for (auto _ : state) {
    c = kernels::gemm_nt(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
}

void bm_gemm_nt_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DenseMatrix a = random_matrix(1, n, n), b = random_matrix(2, n, n), c(n, n);
  for (auto _ : state) {
    c = ref::gemm_nt(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
}

void bm_gemm_tn_omp(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DenseMatrix a = random_matrix(1, n, n), b = random_matrix(2, n, n), c(n, n);
  for (auto _ : state) {
    c = kernels::gemm_tn(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
}

void bm_gemm_tn_serial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  DenseMatrix a = random_matrix(1, n, n), b = random_matrix(2, n, n), c(n, n);
  for (auto _ : state) {
    c = ref::gemm_tn(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
}

}  // namespace

BENCHMARK(bm_gemm_nn_omp)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm_nn_serial)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm_nt_omp)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm_nt_serial)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm_tn_omp)->Arg(128)->Arg(512);
BENCHMARK(bm_gemm_tn_serial)->Arg(128)->Arg(512);

BENCHMARK_MAIN();
