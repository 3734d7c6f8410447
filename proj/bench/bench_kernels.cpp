// Serial references against the OpenMP kernels. Set OMP_NUM_THREADS to vary the pool.

#include <benchmark/benchmark.h>

#include "sharekin/empirics.hpp"
#include "sharekin/engine.hpp"
#include "sharekin/predictability.hpp"
#include "sharekin/stationary.hpp"

using namespace sharekin;

namespace {

SimConfig ensemble_config(std::int64_t replicas) {
  SimConfig c;
  c.params = ModelParams::from_density(508, 10);
  c.max_tau = 40;
  c.sample_taus = SimConfig::integer_taus(c.max_tau);
  c.replicas = replicas;
  c.base_seed = 11;
  return c;
}

void BM_EnsembleSerial(benchmark::State& st) {
  const auto cfg = ensemble_config(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(run_ensemble_serial(cfg));
}
void BM_EnsembleParallel(benchmark::State& st) {
  const auto cfg = ensemble_config(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(run_ensemble(cfg));
}
BENCHMARK(BM_EnsembleSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleParallel)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_PartitionSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(partition_dp_serial(st.range(0), 10 * st.range(0), 2.0));
}
void BM_PartitionParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(partition_dp(st.range(0), 10 * st.range(0), 2.0));
}
BENCHMARK(BM_PartitionSerial)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PartitionParallel)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CriticalUSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(critical_U_serial(38, 0.05, st.range(0)));
}
void BM_CriticalUParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(critical_U(38, 0.05, st.range(0)));
}
BENCHMARK(BM_CriticalUSerial)->Arg(200000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CriticalUParallel)->Arg(200000)->Unit(benchmark::kMillisecond);

struct ReportFixture {
  SharePanel panel;
  GrowthSamples sims;
  ReportFixture() {
    SimConfig c = ensemble_config(1);
    c.params = ModelParams::from_density(200, 20);
    c.max_tau = 20;
    c.sample_taus = SimConfig::integer_taus(c.max_tau);
    panel = synthetic_panel(c);
    ForecastOptions fo;
    fo.rho = 20;
    fo.runs = 200;
    sims = forecast_growth(panel, fo);
  }
};

void BM_ReportSerial(benchmark::State& st) {
  static const ReportFixture f;
  ReportOptions ro;
  ro.n_mc = 10000;
  for (auto _ : st) benchmark::DoNotOptimize(build_report_serial(f.panel, f.sims, ro));
}
void BM_ReportParallel(benchmark::State& st) {
  static const ReportFixture f;
  ReportOptions ro;
  ro.n_mc = 10000;
  for (auto _ : st) benchmark::DoNotOptimize(build_report(f.panel, f.sims, ro));
}
BENCHMARK(BM_ReportSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReportParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
