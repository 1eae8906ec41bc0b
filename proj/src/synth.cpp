#include "chase/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "chase/error.hpp"

namespace chase {

CarbonTrace synth_trace(const SynthParams& p) {
  if (p.length == 0) throw InputError("synthetic trace length must be positive");
  if (p.interval <= 0) throw InputError("interval must be positive");
  if (p.period_steps <= 0) throw InputError("period must be positive");
  if (p.noise_sigma < 0) throw InputError("noise sigma must be non-negative");
  if (p.start_time % p.interval != 0) {
    throw InputError("start time must be a multiple of the interval");
  }
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> values(p.length);
  const std::int64_t first = p.start_time / p.interval;
  for (std::size_t i = 0; i < p.length; ++i) {
    auto phase = (first + static_cast<std::int64_t>(i)) % p.period_steps;
    if (phase < 0) phase += p.period_steps;
    const double angle =
        2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(p.period_steps);
    double v = p.mean + p.amplitude * std::sin(angle);
    if (p.noise_sigma > 0) v += p.noise_sigma * gauss(rng);
    values[i] = std::max(v, 0.0);
  }
  return CarbonTrace(p.start_time, p.interval, std::move(values));
}

}  // namespace chase
