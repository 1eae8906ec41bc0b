#pragma once

#include <cstdint>

#include "chase/trace.hpp"

namespace chase {

// Diurnal sinusoid plus Gaussian noise:
//   ci_k = mean + amplitude * sin(2*pi*g_k/period_steps) + N(0, noise_sigma)
// where g_k is the absolute step index since the epoch, so the phase is tied
// to wall-clock time. Values are clamped at zero.
struct SynthParams {
  double mean = 550.0;
  double amplitude = 150.0;
  std::int64_t period_steps = 48;
  double noise_sigma = 10.0;
  std::size_t length = 552;
  std::int64_t interval = 1800;
  Timestamp start_time = 1673740800;  // 2023-01-15T00:00:00Z
  std::uint64_t seed = 0;
};

CarbonTrace synth_trace(const SynthParams& params);

}  // namespace chase
