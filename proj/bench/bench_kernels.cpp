// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "prt/crc.hpp"
#include "prt/kernels.hpp"
#include "prt/rng.hpp"

namespace {

prt::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  prt::Rng rng(seed);
  std::normal_distribution<double> g;
  prt::Matrix m(rows, cols);
  for (double& v : m.values()) v = g(rng);
  return m;
}

using Gemm = void (*)(const prt::Matrix&, const prt::Matrix&, prt::Matrix&);

template <Gemm kernel>
void BM_gemm_nt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  prt::Matrix c(n, n);
  for (auto _ : state) {
    kernel(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <Gemm kernel>
void BM_gemm_nn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  prt::Matrix c(n, n);
  for (auto _ : state) {
    kernel(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <Gemm kernel>
void BM_gemm_tn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  prt::Matrix c(n, n);
  for (auto _ : state) {
    kernel(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

using Nearest = void (*)(const prt::Matrix&, const prt::Matrix&, std::span<int>,
                         std::span<double>);

template <Nearest kernel>
void BM_nearest_center(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto points = random_matrix(n, 256, 3), centers = random_matrix(10, 256, 4);
  std::vector<int> labels(n);
  std::vector<double> dist(n);
  for (auto _ : state) {
    kernel(points, centers, labels, dist);
    benchmark::DoNotOptimize(labels.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

// CRC coding of a test fold against a dictionary the size of a training fold.
void BM_crc_probabilities(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const auto features = random_matrix(560, 256, 5);
  std::vector<int> labels(560);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < 280 ? 0 : 1;
  const prt::crc::CrcSolver solver(prt::crc::make_dictionary(features, labels, 2), {});
  const auto tests = random_matrix(140, 256, 6);
  for (auto _ : state) benchmark::DoNotOptimize(solver.probabilities(tests));
  state.SetItemsProcessed(state.iterations() * 140);
}

}  // namespace

namespace serial = prt::kernels::serial;
namespace omp = prt::kernels::omp;

BENCHMARK(BM_gemm_nt<serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nt<omp::gemm_nt>)->Name("gemm_nt/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nn<serial::gemm_nn>)->Name("gemm_nn/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nn<omp::gemm_nn>)->Name("gemm_nn/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_tn<serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_tn<omp::gemm_tn>)->Name("gemm_tn/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_nearest_center<serial::nearest_center>)->Name("nearest_center/serial")->Arg(2000);
BENCHMARK(BM_nearest_center<omp::nearest_center>)->Name("nearest_center/omp")->Arg(2000);
BENCHMARK(BM_crc_probabilities)->Name("crc_probabilities/threads")->Arg(1)->Arg(2)->Arg(4);

BENCHMARK_MAIN();
