// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "qdread/circuit.hpp"
#include "qdread/metrics.hpp"
#include "qdread/transport.hpp"

using namespace qdread;

namespace {

const std::vector<double>& bias_grid() {
  static const auto grid = linspace(0.0, 3e-3, 301);
  return grid;
}

MetricsSweep delta_sweep() {
  MetricsSweep s;
  s.cases.assign(qubit_cases.begin(), qubit_cases.end());
  s.delta_grid = linspace(0.05e-3, 0.4e-3, 36);
  s.v_d = 2.225e-3;
  return s;
}

void BM_IvCurveSerial(benchmark::State& state) {
  const auto p = default_device();
  for (auto _ : state) {
    benchmark::DoNotOptimize(iv_curve_serial(MeasurementCase::case_iii, p, bias_grid()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(bias_grid().size()));
}

void BM_IvCurveParallel(benchmark::State& state) {
  const auto p = default_device();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(iv_curve(MeasurementCase::case_iii, p, bias_grid(), {}, workers));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(bias_grid().size()));
}

void BM_MetricsSweepSerial(benchmark::State& state) {
  const auto p = default_device();
  const auto sweep = delta_sweep();
  for (auto _ : state) benchmark::DoNotOptimize(metrics_sweep_serial(sweep, p));
}

void BM_MetricsSweepParallel(benchmark::State& state) {
  const auto p = default_device();
  const auto sweep = delta_sweep();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(metrics_sweep(sweep, p, nullptr, {}, workers));
}

}  // namespace

BENCHMARK(BM_IvCurveSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IvCurveParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MetricsSweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MetricsSweepParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
