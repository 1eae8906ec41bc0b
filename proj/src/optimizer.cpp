#include "chase/optimizer.hpp"

#include <cmath>

#include "chase/error.hpp"

namespace chase {

namespace {

double cost_of(const ProfileEntry& e, double ci, const OptimizerConfig& cfg) {
  const double numerator =
      cfg.eta * e.avg_power * ci + (1.0 - cfg.eta) * cfg.max_power * cfg.max_carbon_intensity;
  return numerator / (kJoulesPerKwh * e.throughput);
}

}  // namespace

void OptimizerConfig::validate(const PowerProfile& profile) const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw InputError("eta must lie in [0,1]");
  if (!(max_power >= static_cast<double>(profile.max_limit()))) {
    throw InputError("max_power must be at least the largest profiled limit (" +
                     std::to_string(profile.max_limit()) + " W)");
  }
  if (!(max_carbon_intensity > 0.0) || !std::isfinite(max_carbon_intensity)) {
    throw InputError("max carbon intensity must be positive");
  }
  if (period <= 0) throw InputError("period must be positive");
}

double cta(double tta_s, double avg_power_w, double avg_ci) {
  return tta_s * avg_power_w * avg_ci / kJoulesPerKwh;
}

double total_cost(double tta_s, double avg_power_w, double avg_ci, const OptimizerConfig& cfg) {
  return tta_s *
         (cfg.eta * avg_power_w * avg_ci +
          (1.0 - cfg.eta) * cfg.max_power * cfg.max_carbon_intensity) /
         kJoulesPerKwh;
}

double period_cost(const PowerProfile& profile, PowerLimit limit, double ci,
                   const OptimizerConfig& cfg) {
  return cost_of(profile.at(limit), ci, cfg);
}

PeriodDecision select_power_limit(const PowerProfile& profile, double ci,
                                  const OptimizerConfig& cfg) {
  if (!(ci >= 0.0) || !std::isfinite(ci)) throw InputError("carbon intensity must be >= 0");
  PeriodDecision out;
  out.forecast_ci = ci;
  out.costs.reserve(profile.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    out.costs.push_back(cost_of(profile[k], ci, cfg));
    if (out.costs[k] < out.costs[best]) best = k;
  }
  out.chosen_limit = profile[best].limit;
  return out;
}

}  // namespace chase
