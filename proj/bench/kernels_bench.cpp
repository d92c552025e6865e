// Serial reference vs OpenMP kernels on training-sized inputs.

#include <benchmark/benchmark.h>

#include "glyfe/kernels.hpp"
#include "glyfe/rng.hpp"

using namespace glyfe;

namespace {

RowMatrix random_rows(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  return m;
}

constexpr Eigen::Index kFeatures = 3 * 36;

template <RowMatrix (*Gram)(const RowMatrix&, const RowMatrix&, double)>
void bm_gram(benchmark::State& state, double param) {
  const RowMatrix a = random_rows(state.range(0), kFeatures, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Gram(a, a, param));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void bm_rbf_serial(benchmark::State& s) { bm_gram<kernels::serial::rbf_gram>(s, 1e-3); }
void bm_rbf_omp(benchmark::State& s) { bm_gram<kernels::omp::rbf_gram>(s, 1e-3); }
void bm_dot_serial(benchmark::State& s) { bm_gram<kernels::serial::dot_gram>(s, 1.0); }
void bm_dot_omp(benchmark::State& s) { bm_gram<kernels::omp::dot_gram>(s, 1.0); }

template <RowMatrix (*Hidden)(const RowMatrix&, const RowMatrix&, const Eigen::VectorXd&)>
void bm_hidden(benchmark::State& state) {
  const RowMatrix x = random_rows(state.range(0), kFeatures, 2);
  const RowMatrix w = random_rows(state.range(1), kFeatures, 3);
  const Eigen::VectorXd b = Eigen::VectorXd::Zero(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(Hidden(x, w, b));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void bm_hidden_serial(benchmark::State& s) { bm_hidden<kernels::serial::logistic_hidden>(s); }
void bm_hidden_omp(benchmark::State& s) { bm_hidden<kernels::omp::logistic_hidden>(s); }

}  // namespace

BENCHMARK(bm_rbf_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_rbf_omp)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_dot_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_dot_omp)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_hidden_serial)->Args({4000, 1000})->Unit(benchmark::kMillisecond);
BENCHMARK(bm_hidden_omp)->Args({4000, 1000})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
