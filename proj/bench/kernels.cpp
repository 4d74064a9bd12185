// Serial reference kernel vs OpenMP kernel on a swap setting.
//   bench_kernels [pulses] [workers]
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include <omp.h>

#include "swapsim/experiments.h"

using namespace swapsim;

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int main(int argc, char** argv) {
  const std::uint64_t pulses = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2'000'000;
  const int workers = argc > 2 ? std::atoi(argv[2]) : omp_get_max_threads();

  ExperimentConfig cfg;
  SetupSettings s;
  s.polarizers[1] = 0.0;
  s.polarizers[2] = 0.0;
  const Engine engine = make_engine(cfg, SetupKind::Swap, s, {{0b1111, 0}, {0b0011, 0}});

  RunTotals a, b;
  const double ts = seconds([&] { a = run_serial(engine, pulses, 42); });
  const double tp = seconds([&] { b = run_parallel(engine, pulses, 42, workers); });

  std::printf("pulses            %llu\n", static_cast<unsigned long long>(pulses));
  std::printf("serial            %.3f s  (%.1f ns/pulse)\n", ts, 1e9 * ts / static_cast<double>(pulses));
  std::printf("openmp x%-2d        %.3f s  (%.1f ns/pulse)\n", workers, tp, 1e9 * tp / static_cast<double>(pulses));
  std::printf("speedup           %.2f\n", ts / tp);
  std::printf("counts identical  %s\n", a.counts == b.counts ? "yes" : "NO");
  return a.counts == b.counts ? 0 : 1;
}
