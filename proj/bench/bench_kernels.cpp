// Serial reference vs OpenMP kernels. Prints one line per kernel with the
// best-of-N wall time of each variant and the resulting speedup.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "chase/kernels.hpp"
#include "chase/synth.hpp"

using namespace chase;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %10.3f ms   parallel %10.3f ms   speedup %5.2fx\n", name,
              serial * 1e3, parallel * 1e3, serial / parallel);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", parallel_threads());
  std::mt19937_64 rng(0);
  std::normal_distribution<double> g(0.0, 1.0);

  std::vector<FeatureVector> x(2000);
  for (auto& v : x) v = {g(rng), g(rng), g(rng)};
  volatile double sink = 0;
  report("rbf_gram n=2000", best_of(5, [&] { sink = rbf_gram_serial(x, 0.33)[7]; }),
         best_of(5, [&] { sink = rbf_gram(x, 0.33)[7]; }));

  auto profile = profile_gpu(default_gpu(), default_power_limits());
  OptimizerConfig cfg;
  std::vector<double> ci(1000000);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (auto& c : ci) c = u(rng);
  report("select_power_limits n=1e6",
         best_of(5, [&] { sink = static_cast<double>(select_power_limits_serial(profile, ci, cfg)[3]); }),
         best_of(5, [&] { sink = static_cast<double>(select_power_limits(profile, ci, cfg)[3]); }));

  auto trace = synth_trace({});
  TrainingJob job{200000000, trace.start_time() + 86400};
  ForecasterSpec f;
  std::vector<double> etas;
  for (int i = 0; i <= 20; ++i) etas.push_back(i / 20.0);
  report("sweep_eta 21 runs (svr)",
         best_of(3, [&] { sink = sweep_eta_serial(job, trace, profile, f, cfg, etas)[0].total_carbon; }),
         best_of(3, [&] { sink = sweep_eta(job, trace, profile, f, cfg, etas)[0].total_carbon; }));
  (void)sink;
  return 0;
}
