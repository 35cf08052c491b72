// Serial reference path against the OpenMP path for the data-parallel kernels.

#include <benchmark/benchmark.h>

#include "nvsim/fitting.hpp"
#include "nvsim/photodynamics.hpp"
#include "nvsim/sweep.hpp"

namespace {

using nvsim::Execution;

Execution mode(const benchmark::State& st) { return st.range(0) ? Execution::parallel : Execution::serial; }

void label(benchmark::State& st) { st.SetLabel(st.range(0) ? "openmp" : "serial"); }

void BM_StrainSweep(benchmark::State& st) {
  const auto grid = nvsim::linear_grid(0.0, 20.0, 801);
  for (auto _ : st) benchmark::DoNotOptimize(nvsim::sweep(nvsim::FineStructureParams{}, grid, mode(st)));
  label(st);
}

void BM_ExcitationSpectrum(benchmark::State& st) {
  const auto grid = nvsim::linear_grid(-10.0, 10.0, 2001);
  for (auto _ : st)
    benchmark::DoNotOptimize(nvsim::excitation_spectrum(nvsim::FineStructureParams{}, nvsim::StrainVector::along_x(3.0),
                                                        nvsim::RateParams{}, grid, true, mode(st)));
  label(st);
}

void BM_FitSynthetic(benchmark::State& st) {
  std::vector<double> strains, offsets;
  for (int i = 0; i < 27; ++i) {
    strains.push_back(0.5 + 19.5 * i / 26.0);
    offsets.push_back(0.1 * i);
  }
  const auto data = nvsim::synthesize_defects(nvsim::FineStructureParams{}, strains, offsets, 0.01, 7);
  nvsim::FitModel init;
  init.lambda_z.value = 5.0;
  nvsim::FitOptions opt;
  opt.exec = mode(st);
  for (auto _ : st) benchmark::DoNotOptimize(nvsim::fit(data, init, opt));
  label(st);
}

}  // namespace

BENCHMARK(BM_StrainSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExcitationSpectrum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitSynthetic)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
