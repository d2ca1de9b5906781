// Serial reference kernels against their OpenMP counterparts.
//
//   kernel_bench --benchmark_filter=gramian

#include <benchmark/benchmark.h>

#include <random>

#include "vqalign/kernels.hpp"

namespace k = vqalign::kernels;

namespace {

k::Matrix random_matrix(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(rows * 7919 + cols);
  std::normal_distribution<double> n;
  k::Matrix m(rows, cols);
  for (auto& v : m.data) v = n(rng);
  return m;
}

// Gramian: N answers x 768-d embeddings.
template <k::Matrix (*F)(const k::Matrix&)>
void gramian(benchmark::State& state) {
  const auto x = random_matrix(state.range(0), 768);
  for (auto _ : state) benchmark::DoNotOptimize(F(x));
}

// Cross-system correlations: S systems x N(N-1)/2 triangle entries, N = 105.
template <k::Matrix (*F)(const k::Matrix&)>
void correlations(benchmark::State& state) {
  const auto v = random_matrix(state.range(0), 105 * 104 / 2);
  for (auto _ : state) benchmark::DoNotOptimize(F(v));
}

// Median over S systems of 768-d vectors, repeated per cell.
template <std::vector<double> (*F)(const k::Matrix&)>
void medians(benchmark::State& state) {
  const auto x = random_matrix(state.range(0), 768);
  for (auto _ : state) benchmark::DoNotOptimize(F(x));
}

template <std::vector<double> (*F)(const k::Matrix&, std::span<const double>)>
void distances(benchmark::State& state) {
  const auto x = random_matrix(state.range(0), 768);
  const std::vector<double> p(768, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(F(x, p));
}

}  // namespace

BENCHMARK(gramian<k::serial::gramian>)->Name("gramian/serial")->Arg(35)->Arg(105)->Arg(420);
BENCHMARK(gramian<k::parallel::gramian>)->Name("gramian/parallel")->Arg(35)->Arg(105)->Arg(420);
BENCHMARK(correlations<k::serial::row_correlations>)->Name("correlations/serial")->Arg(12)->Arg(48);
BENCHMARK(correlations<k::parallel::row_correlations>)->Name("correlations/parallel")->Arg(12)->Arg(48);
BENCHMARK(medians<k::serial::column_medians>)->Name("medians/serial")->Arg(12)->Arg(64);
BENCHMARK(medians<k::parallel::column_medians>)->Name("medians/parallel")->Arg(12)->Arg(64);
BENCHMARK(distances<k::serial::row_distances>)->Name("distances/serial")->Arg(12)->Arg(1024);
BENCHMARK(distances<k::parallel::row_distances>)->Name("distances/parallel")->Arg(12)->Arg(1024);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_threads", std::to_string(k::parallel::max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
