#include "chase/kernels.hpp"

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace chase {

namespace {

void gram_row(std::span<const FeatureVector> x, double gamma, std::size_t i, double* row) {
  for (std::size_t j = 0; j < x.size(); ++j) row[j] = rbf_kernel(x[i], x[j], gamma);
}

}  // namespace

int parallel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<double> rbf_gram_serial(std::span<const FeatureVector> x, double gamma) {
  const std::size_t n = x.size();
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i) gram_row(x, gamma, i, out.data() + i * n);
  return out;
}

std::vector<double> rbf_gram(std::span<const FeatureVector> x, double gamma) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(x.size() * x.size());
#pragma omp parallel for schedule(static) if (n > 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    gram_row(x, gamma, static_cast<std::size_t>(i), out.data() + i * n);
  }
  return out;
}

std::vector<PowerLimit> select_power_limits_serial(const PowerProfile& profile,
                                                   std::span<const double> ci,
                                                   const OptimizerConfig& cfg) {
  std::vector<PowerLimit> out;
  out.reserve(ci.size());
  for (double c : ci) out.push_back(select_power_limit(profile, c, cfg).chosen_limit);
  return out;
}

std::vector<PowerLimit> select_power_limits(const PowerProfile& profile,
                                            std::span<const double> ci,
                                            const OptimizerConfig& cfg) {
  const auto n = static_cast<std::ptrdiff_t>(ci.size());
  std::vector<PowerLimit> out(ci.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          select_power_limit(profile, ci[static_cast<std::size_t>(i)], cfg).chosen_limit;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<SimReport> sweep_eta_serial(const TrainingJob& job, const CarbonTrace& trace,
                                        const PowerProfile& profile,
                                        const ForecasterSpec& forecaster,
                                        const OptimizerConfig& cfg, std::span<const double> etas) {
  std::vector<SimReport> out;
  out.reserve(etas.size());
  for (double eta : etas) {
    OptimizerConfig c = cfg;
    c.eta = eta;
    out.push_back(run_carbon_aware(job, trace, profile, forecaster, c));
  }
  return out;
}

std::vector<SimReport> sweep_eta(const TrainingJob& job, const CarbonTrace& trace,
                                 const PowerProfile& profile, const ForecasterSpec& forecaster,
                                 const OptimizerConfig& cfg, std::span<const double> etas) {
  const auto n = static_cast<std::ptrdiff_t>(etas.size());
  std::vector<SimReport> out(etas.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      OptimizerConfig c = cfg;
      c.eta = etas[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = run_carbon_aware(job, trace, profile, forecaster, c);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace chase
