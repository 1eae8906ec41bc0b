#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chase/forecast.hpp"
#include "chase/optimizer.hpp"
#include "chase/profile.hpp"
#include "chase/trace.hpp"

namespace chase {

// A fixed amount of training work submitted at start_time.
struct TrainingJob {
  std::uint64_t total_samples = 0;
  Timestamp start_time = 0;

  bool operator==(const TrainingJob&) const = default;
};

struct ForecasterSpec {
  ModelKind kind = ModelKind::kSvr;
  SvrHyperparams svr{};
  std::int64_t fit_hours = 24;
  // Feed the true mean intensity of each period instead of a forecast.
  bool oracle = false;
};

struct SimOptions {
  // Charge one trace step per profiled limit before the job starts.
  bool count_profiling = false;
};

enum class RunMode { kCarbonAware, kBaseline };

std::string to_string(RunMode mode);

struct PeriodRecord {
  PeriodDecision decision;  // forecast_ci is NaN and costs empty when not forecast
  double avg_power = 0.0;   // W, constant over the period
  double actual_mean_ci = 0.0;  // time-weighted over the executed part
  double duration = 0.0;        // s
  std::uint64_t samples_done = 0;
  double energy_j = 0.0;
  double carbon_g = 0.0;
  bool profiling = false;

  bool operator==(const PeriodRecord&) const = default;
};

struct SimReport {
  RunMode mode = RunMode::kBaseline;
  TrainingJob job{};
  std::string trace_id;
  double total_time = 0.0;    // s
  double total_energy = 0.0;  // J
  double total_carbon = 0.0;  // g, integrated step by step
  double cta_estimate = 0.0;  // g, time * mean power * mean intensity
  std::vector<PeriodRecord> periods;
};

// Accounting fields (period grid, limits, samples, time, energy, carbon)
// compared bit for bit; forecasts and cost vectors are ignored.
bool same_accounting(const SimReport& a, const SimReport& b);

struct ComparisonSummary {
  double carbon_reduction_pct = 0.0;
  double time_increase_pct = 0.0;
  double energy_reduction_pct = 0.0;
};

// Identifies a trace by its grid and a hash of its values.
std::string trace_digest(const CarbonTrace& trace);

// Runs at the profile's maximum limit throughout. period_s <= 0 uses the
// trace interval.
SimReport run_baseline(const TrainingJob& job, const CarbonTrace& trace,
                       const PowerProfile& profile, std::int64_t period_s = 0);

SimReport run_carbon_aware(const TrainingJob& job, const CarbonTrace& trace,
                           const PowerProfile& profile, const ForecasterSpec& forecaster,
                           const OptimizerConfig& cfg, const SimOptions& options = {});

ComparisonSummary compare(const SimReport& aware, const SimReport& baseline);

// period_start,forecast_ci,actual_mean_ci,chosen_limit_w,avg_power_w,samples_done,energy_j,carbon_g
std::string emit_timeline(const SimReport& report);

std::string serialize_report(const SimReport& report);
SimReport parse_report(const std::string& text);

std::string serialize_summary(const ComparisonSummary& summary);

}  // namespace chase
