#pragma once

// Data-parallel kernels (OpenMP when available) next to the serial
// references they must match bit for bit.

#include <span>
#include <vector>

#include "chase/optimizer.hpp"
#include "chase/simulator.hpp"
#include "chase/svr.hpp"

namespace chase {

// Row-major n x n RBF Gram matrix.
std::vector<double> rbf_gram(std::span<const FeatureVector> x, double gamma);
std::vector<double> rbf_gram_serial(std::span<const FeatureVector> x, double gamma);

// Chosen limit for each intensity in `ci`.
std::vector<PowerLimit> select_power_limits(const PowerProfile& profile,
                                            std::span<const double> ci,
                                            const OptimizerConfig& cfg);
std::vector<PowerLimit> select_power_limits_serial(const PowerProfile& profile,
                                                   std::span<const double> ci,
                                                   const OptimizerConfig& cfg);

// One carbon-aware simulation per eta; all other inputs shared.
std::vector<SimReport> sweep_eta(const TrainingJob& job, const CarbonTrace& trace,
                                 const PowerProfile& profile, const ForecasterSpec& forecaster,
                                 const OptimizerConfig& cfg, std::span<const double> etas);
std::vector<SimReport> sweep_eta_serial(const TrainingJob& job, const CarbonTrace& trace,
                                        const PowerProfile& profile,
                                        const ForecasterSpec& forecaster,
                                        const OptimizerConfig& cfg, std::span<const double> etas);

int parallel_threads();

}  // namespace chase
