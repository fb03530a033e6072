#include <benchmark/benchmark.h>

#include <vector>

#include "bae/evalkit.hpp"
#include "bae/rng.hpp"

namespace {

std::vector<bae::CalibrationRecord> records_of(int n) {
  bae::RngStream rng(11);
  std::vector<bae::CalibrationRecord> records(static_cast<std::size_t>(n));
  for (auto& r : records) {
    r.q = rng.next_double();
    r.c = rng.next_bernoulli(0.6) ? 1 : 0;
  }
  return records;
}

void BM_Ece(benchmark::State& state) {
  const auto records = records_of(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bae::ece(records));
}
BENCHMARK(BM_Ece)->Arg(1000)->Arg(10000);

void BM_Auroc(benchmark::State& state) {
  const auto records = records_of(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bae::auroc(records));
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(10000);

void BM_BootstrapSem(benchmark::State& state) {
  const auto records = records_of(1000);
  for (auto _ : state)
    benchmark::DoNotOptimize(bae::bootstrap_sem(records, bae::CalibrationMetric::brier,
                                                static_cast<int>(state.range(0)),
                                                bae::RngStream(3)));
}
BENCHMARK(BM_BootstrapSem)->Arg(100)->Arg(1000);

}  // namespace
