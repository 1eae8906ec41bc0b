#pragma once

#include <cstdint>
#include <vector>

#include "chase/profile.hpp"
#include "chase/trace.hpp"

namespace chase {

// Joules per kWh; converts W * s * (g/kWh) into grams.
constexpr double kJoulesPerKwh = 3.6e6;

struct OptimizerConfig {
  double eta = 0.5;                     // 1: carbon only, 0: time only
  double max_power = 300.0;             // W
  double max_carbon_intensity = 750.0;  // g/kWh
  std::int64_t period = 1800;           // s

  // Throws InputError on any violated constraint.
  void validate(const PowerProfile& profile) const;
};

struct PeriodDecision {
  Timestamp period_start = 0;
  double forecast_ci = 0.0;
  PowerLimit chosen_limit = 0;
  std::vector<double> costs;  // g/sample, aligned with profile entries

  bool operator==(const PeriodDecision&) const = default;
};

// Carbon to reach the target: time * power * intensity, in g.
double cta(double tta_s, double avg_power_w, double avg_ci);

// Weighted carbon/time cost over a whole run, in g.
double total_cost(double tta_s, double avg_power_w, double avg_ci, const OptimizerConfig& cfg);

// Per-sample cost of running the next period at `limit`, in g/sample.
double period_cost(const PowerProfile& profile, PowerLimit limit, double ci,
                   const OptimizerConfig& cfg);

// Minimizes period_cost over the profile; ties go to the lowest limit.
PeriodDecision select_power_limit(const PowerProfile& profile, double ci,
                                  const OptimizerConfig& cfg);

}  // namespace chase
