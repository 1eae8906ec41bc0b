#include "chase/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "chase/error.hpp"
#include "chase/numfmt.hpp"

namespace chase {

namespace {

using Policy = std::function<PeriodDecision(Timestamp period_start, std::size_t step_index)>;

std::size_t step_index_of(const CarbonTrace& trace, Timestamp t) {
  if (t < trace.start_time() || t >= trace.end_time()) {
    throw InputError("time " + std::to_string(t) + " outside trace");
  }
  if ((t - trace.start_time()) % trace.interval() != 0) {
    throw InputError("time " + std::to_string(t) + " not aligned to a trace step");
  }
  return static_cast<std::size_t>((t - trace.start_time()) / trace.interval());
}

std::int64_t period_steps(const CarbonTrace& trace, std::int64_t period_s) {
  if (period_s <= 0 || period_s % trace.interval() != 0) {
    throw InputError("period " + std::to_string(period_s) +
                     " s must be a positive multiple of the trace interval " +
                     std::to_string(trace.interval()) + " s");
  }
  return period_s / trace.interval();
}

void finish_totals(SimReport& report) {
  double ci_time = 0.0;
  for (const auto& p : report.periods) {
    report.total_time += p.duration;
    report.total_energy += p.energy_j;
    report.total_carbon += p.carbon_g;
    ci_time += p.actual_mean_ci * p.duration;
  }
  if (report.total_time > 0) {
    report.cta_estimate = cta(report.total_time, report.total_energy / report.total_time,
                              ci_time / report.total_time);
  }
}

// Charges energy and carbon for `seconds` at constant power starting at step k.
void charge(PeriodRecord& rec, double power, double ci, double seconds) {
  rec.duration += seconds;
  rec.energy_j += power * seconds;
  rec.carbon_g += power * seconds / kJoulesPerKwh * ci;
  rec.actual_mean_ci += ci * seconds;  // normalized once the period closes
}

void close_period(PeriodRecord& rec) {
  if (rec.duration > 0) rec.actual_mean_ci /= rec.duration;
}

// Replays the job from start_step on a fixed period grid. Each period runs
// at the limit the policy chooses; a job ending mid-step is charged pro rata.
void replay(const TrainingJob& job, const CarbonTrace& trace, const PowerProfile& profile,
            std::size_t start_step, std::int64_t steps_per_period, const Policy& policy,
            SimReport& report) {
  const double total = static_cast<double>(job.total_samples);
  const auto interval = static_cast<double>(trace.interval());
  double progress = 0.0;
  std::size_t k = start_step;
  auto exhausted = [&](double done) {
    return SimulationError("trace exhausted at t=" + std::to_string(trace.end_time()) +
                           " with " + format_real(total - done) + " of " +
                           std::to_string(job.total_samples) + " samples remaining");
  };
  while (progress < total) {
    if (k >= trace.size()) throw exhausted(progress);
    PeriodRecord rec;
    rec.decision = policy(trace.time_at(k), k);
    const auto& entry = profile.at(rec.decision.chosen_limit);
    rec.avg_power = entry.avg_power;
    const double before = progress;
    for (std::int64_t s = 0; s < steps_per_period && progress < total; ++s, ++k) {
      if (k >= trace.size()) throw exhausted(progress);
      const double capacity = entry.throughput * interval;
      const double remaining = total - progress;
      if (remaining <= capacity) {
        charge(rec, entry.avg_power, trace[k], remaining / entry.throughput);
        progress = total;
      } else {
        charge(rec, entry.avg_power, trace[k], interval);
        progress += capacity;
      }
    }
    close_period(rec);
    rec.samples_done =
        static_cast<std::uint64_t>(std::floor(progress)) - static_cast<std::uint64_t>(std::floor(before));
    report.periods.push_back(std::move(rec));
  }
}

PeriodDecision fixed_decision(Timestamp t, PowerLimit limit) {
  PeriodDecision d;
  d.period_start = t;
  d.forecast_ci = std::numeric_limits<double>::quiet_NaN();
  d.chosen_limit = limit;
  return d;
}

nlohmann::json real_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

RunMode mode_from_string(const std::string& s) {
  if (s == "carbon-aware") return RunMode::kCarbonAware;
  if (s == "baseline") return RunMode::kBaseline;
  throw InputError("unknown report mode '" + s + "'");
}

double pct(double num, double den) { return den == 0.0 ? 0.0 : 100.0 * num / den; }

}  // namespace

std::string to_string(RunMode mode) {
  return mode == RunMode::kCarbonAware ? "carbon-aware" : "baseline";
}

bool same_accounting(const SimReport& a, const SimReport& b) {
  if (!(a.job == b.job) || a.trace_id != b.trace_id || a.total_time != b.total_time ||
      a.total_energy != b.total_energy || a.total_carbon != b.total_carbon ||
      a.cta_estimate != b.cta_estimate || a.periods.size() != b.periods.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.periods.size(); ++i) {
    const auto& x = a.periods[i];
    const auto& y = b.periods[i];
    if (x.decision.period_start != y.decision.period_start ||
        x.decision.chosen_limit != y.decision.chosen_limit || x.avg_power != y.avg_power ||
        x.actual_mean_ci != y.actual_mean_ci || x.duration != y.duration ||
        x.samples_done != y.samples_done || x.energy_j != y.energy_j ||
        x.carbon_g != y.carbon_g || x.profiling != y.profiling) {
      return false;
    }
  }
  return true;
}

std::string trace_digest(const CarbonTrace& trace) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (double v : trace.intensities()) {
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof v);
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return std::to_string(trace.start_time()) + ":" + std::to_string(trace.interval()) + ":" +
         std::to_string(trace.size()) + ":" + hex;
}

SimReport run_baseline(const TrainingJob& job, const CarbonTrace& trace,
                       const PowerProfile& profile, std::int64_t period_s) {
  if (job.total_samples == 0) throw InputError("job must have positive total_samples");
  const auto steps = period_steps(trace, period_s > 0 ? period_s : trace.interval());
  SimReport report;
  report.mode = RunMode::kBaseline;
  report.job = job;
  report.trace_id = trace_digest(trace);
  const PowerLimit max_limit = profile.max_limit();
  replay(job, trace, profile, step_index_of(trace, job.start_time), steps,
         [&](Timestamp t, std::size_t) { return fixed_decision(t, max_limit); }, report);
  finish_totals(report);
  return report;
}

SimReport run_carbon_aware(const TrainingJob& job, const CarbonTrace& trace,
                           const PowerProfile& profile, const ForecasterSpec& forecaster,
                           const OptimizerConfig& cfg, const SimOptions& options) {
  if (job.total_samples == 0) throw InputError("job must have positive total_samples");
  cfg.validate(profile);
  const auto steps = period_steps(trace, cfg.period);
  std::size_t start = step_index_of(trace, job.start_time);
  if (forecaster.fit_hours <= 0) throw InputError("fit_hours must be positive");
  const Timestamp fit_begin = job.start_time - forecaster.fit_hours * 3600;
  if (fit_begin < trace.start_time()) {
    throw InputError("trace must provide " + std::to_string(forecaster.fit_hours) +
                     " h of history before the job start");
  }

  ForecastModel model;
  if (!forecaster.oracle) {
    const auto spd = steps_per_day_for(trace.interval());
    const auto history = trace.slice({fit_begin, job.start_time});
    model = fit_model(forecaster.kind, build_features(history, spd), spd, forecaster.svr);
  }

  SimReport report;
  report.mode = RunMode::kCarbonAware;
  report.job = job;
  report.trace_id = trace_digest(trace);

  if (options.count_profiling) {
    for (const auto& entry : profile.entries()) {
      if (start >= trace.size()) {
        throw SimulationError("trace exhausted during profiling at t=" +
                              std::to_string(trace.end_time()));
      }
      PeriodRecord rec;
      rec.decision = fixed_decision(trace.time_at(start), entry.limit);
      rec.avg_power = entry.avg_power;
      rec.profiling = true;
      charge(rec, entry.avg_power, trace[start], static_cast<double>(trace.interval()));
      close_period(rec);
      report.periods.push_back(std::move(rec));
      ++start;
    }
  }

  const Policy policy = [&](Timestamp t, std::size_t k) {
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(steps), trace.size() - k);
    double ci = 0.0;
    if (forecaster.oracle) {
      for (std::size_t s = 0; s < n; ++s) ci += trace[k + s];
      ci /= static_cast<double>(n);
    } else {
      // Lag is the last fully observed sample before the period.
      const auto fc = forecast_horizon(model, step_of_day(t, trace.interval()), trace[k - 1],
                                       static_cast<std::size_t>(steps));
      ci = std::accumulate(fc.begin(), fc.end(), 0.0) / static_cast<double>(fc.size());
    }
    PeriodDecision d = select_power_limit(profile, ci, cfg);
    d.period_start = t;
    return d;
  };
  replay(job, trace, profile, start, steps, policy, report);
  finish_totals(report);
  return report;
}

ComparisonSummary compare(const SimReport& aware, const SimReport& baseline) {
  if (!(aware.job == baseline.job) || aware.trace_id != baseline.trace_id) {
    throw InputError("reports describe different jobs or traces");
  }
  ComparisonSummary s;
  s.carbon_reduction_pct = pct(baseline.total_carbon - aware.total_carbon, baseline.total_carbon);
  s.energy_reduction_pct = pct(baseline.total_energy - aware.total_energy, baseline.total_energy);
  s.time_increase_pct = pct(aware.total_time - baseline.total_time, baseline.total_time);
  return s;
}

std::string emit_timeline(const SimReport& report) {
  std::string out =
      "period_start,forecast_ci,actual_mean_ci,chosen_limit_w,avg_power_w,samples_done,energy_j,"
      "carbon_g\n";
  for (const auto& p : report.periods) {
    out += std::to_string(p.decision.period_start);
    out += ',';
    if (std::isfinite(p.decision.forecast_ci)) out += format_real(p.decision.forecast_ci);
    out += ',' + format_real(p.actual_mean_ci);
    out += ',' + std::to_string(p.decision.chosen_limit);
    out += ',' + format_real(p.avg_power);
    out += ',' + std::to_string(p.samples_done);
    out += ',' + format_real(p.energy_j);
    out += ',' + format_real(p.carbon_g);
    out += '\n';
  }
  return out;
}

std::string serialize_report(const SimReport& report) {
  nlohmann::json doc;
  doc["mode"] = to_string(report.mode);
  doc["job"] = {{"total_samples", report.job.total_samples},
                {"start_time", report.job.start_time}};
  doc["trace_id"] = report.trace_id;
  doc["total_time_s"] = report.total_time;
  doc["total_energy_j"] = report.total_energy;
  doc["total_carbon_g"] = report.total_carbon;
  doc["cta_estimate_g"] = report.cta_estimate;
  auto& periods = doc["periods"] = nlohmann::json::array();
  for (const auto& p : report.periods) {
    periods.push_back({{"period_start", p.decision.period_start},
                       {"forecast_ci", real_or_null(p.decision.forecast_ci)},
                       {"chosen_limit_w", p.decision.chosen_limit},
                       {"costs_g_per_sample", p.decision.costs},
                       {"avg_power_w", p.avg_power},
                       {"actual_mean_ci", p.actual_mean_ci},
                       {"duration_s", p.duration},
                       {"samples_done", p.samples_done},
                       {"energy_j", p.energy_j},
                       {"carbon_g", p.carbon_g},
                       {"profiling", p.profiling}});
  }
  return doc.dump(2) + "\n";
}

SimReport parse_report(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    SimReport r;
    r.mode = mode_from_string(doc.at("mode").get<std::string>());
    r.job.total_samples = doc.at("job").at("total_samples").get<std::uint64_t>();
    r.job.start_time = doc.at("job").at("start_time").get<Timestamp>();
    r.trace_id = doc.at("trace_id").get<std::string>();
    r.total_time = doc.at("total_time_s").get<double>();
    r.total_energy = doc.at("total_energy_j").get<double>();
    r.total_carbon = doc.at("total_carbon_g").get<double>();
    r.cta_estimate = doc.at("cta_estimate_g").get<double>();
    for (const auto& p : doc.at("periods")) {
      PeriodRecord rec;
      rec.decision.period_start = p.at("period_start").get<Timestamp>();
      const auto& fc = p.at("forecast_ci");
      rec.decision.forecast_ci =
          fc.is_null() ? std::numeric_limits<double>::quiet_NaN() : fc.get<double>();
      rec.decision.chosen_limit = p.at("chosen_limit_w").get<PowerLimit>();
      rec.decision.costs = p.at("costs_g_per_sample").get<std::vector<double>>();
      rec.avg_power = p.at("avg_power_w").get<double>();
      rec.actual_mean_ci = p.at("actual_mean_ci").get<double>();
      rec.duration = p.at("duration_s").get<double>();
      rec.samples_done = p.at("samples_done").get<std::uint64_t>();
      rec.energy_j = p.at("energy_j").get<double>();
      rec.carbon_g = p.at("carbon_g").get<double>();
      rec.profiling = p.value("profiling", false);
      r.periods.push_back(std::move(rec));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed report JSON: ") + e.what());
  }
}

std::string serialize_summary(const ComparisonSummary& summary) {
  nlohmann::json doc{{"carbon_reduction_pct", summary.carbon_reduction_pct},
                     {"energy_reduction_pct", summary.energy_reduction_pct},
                     {"time_increase_pct", summary.time_increase_pct}};
  return doc.dump(2) + "\n";
}

}  // namespace chase
