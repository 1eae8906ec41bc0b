// Acceptance suite: one PASS/FAIL line per criterion, each with its own
// runtime budget. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "chase/forecast.hpp"
#include "chase/optimizer.hpp"
#include "chase/profile.hpp"
#include "chase/simulator.hpp"
#include "chase/synth.hpp"
#include "chase/trace.hpp"
#include "test_support.hpp"

using namespace chase;
using namespace chase::testing;

namespace {

// Frozen from the first verified run of the end-to-end scenario below.
constexpr double kE2eCarbonReductionPct = 18.532479128206955;
constexpr double kE2eTimeIncreasePct = 21.428571428571423;  // 850/700 - 1: 200 W throughout

// Collects failed checks; the first few are reported.
class Outcome {
 public:
  void check(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    if (failures_.size() < 3) failures_.push_back(what);
    ++failed_;
  }
  void note(std::string text) { notes_ = std::move(text); }

  bool ok() const { return failed_ == 0; }
  std::string detail() const {
    std::ostringstream s;
    s << checks_ << " checks";
    if (!notes_.empty()) s << "; " << notes_;
    if (failed_ > 0) {
      s << "; " << failed_ << " failed:";
      for (const auto& f : failures_) s << " [" << f << "]";
    }
    return s.str();
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string str(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Cost recomputed from first principles: carbon term weighted by eta plus
// the time term priced at the worst-case power and intensity, per sample.
double cost_by_hand(const ProfileEntry& e, double ci, const OptimizerConfig& cfg) {
  const double g_per_joule_now = ci / 3.6e6;
  const double g_per_joule_max = cfg.max_carbon_intensity / 3.6e6;
  const double seconds_per_sample = 1.0 / e.throughput;
  return seconds_per_sample * (cfg.eta * e.avg_power * g_per_joule_now +
                               (1.0 - cfg.eta) * cfg.max_power * g_per_joule_max);
}

void optimizer_oracle(Outcome& out) {
  std::mt19937_64 rng(20230115);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t disagreements_with_hand_cost = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    auto p = random_profile(rng, rep % 2 == 0);
    auto cfg = config(rep % 10 == 0 ? static_cast<double>(rep % 20 == 0) : unit(rng),
                      static_cast<double>(p.max_limit()) * (1.0 + unit(rng)),
                      100.0 + 900.0 * unit(rng));
    const double ci = 1000.0 * unit(rng);
    // Exhaustive argmin of the library's per-period cost, lowest limit first.
    PowerLimit best = p[0].limit;
    double best_cost = period_cost(p, best, ci, cfg);
    for (const auto& e : p.entries()) {
      const double c = period_cost(p, e.limit, ci, cfg);
      if (c < best_cost) {
        best = e.limit;
        best_cost = c;
      }
      if (std::abs(c - cost_by_hand(e, ci, cfg)) > 1e-12 * std::abs(c)) ++disagreements_with_hand_cost;
    }
    out.check(select_power_limit(p, ci, cfg).chosen_limit == best, "case " + std::to_string(rep));
  }
  out.check(disagreements_with_hand_cost == 0, "period_cost disagrees with the hand-derived cost");
  out.note("2000 randomized cases");
}

void monotone_downshift(Outcome& out) {
  std::mt19937_64 rng(20230116);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    auto p = random_profile(rng, true);
    auto cfg = config(unit(rng), static_cast<double>(p.max_limit()), 200.0 + 800.0 * unit(rng));
    PowerLimit prev = p.max_limit();
    for (int k = 0; k < 50; ++k) {
      const double ci = 20.0 * k + 10.0 * unit(rng);
      const PowerLimit chosen = select_power_limit(p, ci, cfg).chosen_limit;
      out.check(chosen <= prev, "profile " + std::to_string(rep) + " ci " + str(ci));
      prev = chosen;
    }
  }
  out.note("100 profiles x 50 intensities");
}

void reduction_identities(Outcome& out) {
  // eta = 0 against the baseline, on a small diurnal trace.
  SynthParams sp;
  sp.length = 4 * 48;
  auto trace = synth_trace(sp);
  auto profile = profile_gpu(default_gpu(), default_power_limits());
  TrainingJob job{60000000, trace.start_time() + 86400};
  for (std::int64_t period : {1800, 3600}) {
    ForecasterSpec f;
    f.kind = ModelKind::kLinear;
    auto aware = run_carbon_aware(job, trace, profile, f, config(0.0, 300.0, 750.0, period));
    auto base = run_baseline(job, trace, profile, period);
    out.check(same_accounting(aware, base), "eta=0, period " + std::to_string(period));
    out.check(aware.total_time == base.total_time && aware.total_energy == base.total_energy &&
                  aware.total_carbon == base.total_carbon,
              "eta=0 totals, period " + std::to_string(period));
  }

  // eta = 1 under constant intensity picks the lowest energy per sample.
  std::mt19937_64 rng(20230117);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    auto p = random_profile(rng, rep % 2 == 0);
    PowerLimit best = p[0].limit;
    for (const auto& e : p.entries()) {
      if (e.avg_power / e.throughput < p.at(best).avg_power / p.at(best).throughput) best = e.limit;
    }
    const double ci = 50.0 + 900.0 * unit(rng);
    CarbonTrace flat(kMidnight, 1800, std::vector<double>(48 + 8, ci));
    ForecasterSpec f;
    f.kind = ModelKind::kPersistence;
    auto r = run_carbon_aware(job_after_history(static_cast<std::uint64_t>(3000 * p[0].throughput)),
                              flat, p, f, config(1.0, static_cast<double>(p.max_limit()), ci));
    bool all = true;
    for (const auto& rec : r.periods) all = all && rec.decision.chosen_limit == best;
    out.check(all, "eta=1 case " + std::to_string(rep));
  }
  out.note("eta=0 at 2 periods, eta=1 on 200 profiles");
}

void check_conservation(Outcome& out, const SimReport& r, const CarbonTrace& trace,
                        const PowerProfile& profile, const std::string& label) {
  double energy = 0.0, carbon = 0.0;
  std::uint64_t samples = 0;
  for (const auto& p : r.periods) {
    energy += p.energy_j;
    carbon += p.carbon_g;
    samples += p.samples_done;
  }
  out.check(close_rel(r.total_energy, energy, 1e-9), label + ": energy vs periods");
  out.check(close_rel(r.total_carbon, carbon, 1e-9), label + ": carbon vs periods");
  out.check(close_rel(r.total_energy, stepwise_energy(r, profile), 1e-9), label + ": stepwise energy");
  out.check(close_rel(r.total_carbon, stepwise_carbon(r, trace, profile), 1e-9),
            label + ": stepwise carbon");
  out.check(samples == r.job.total_samples, label + ": samples");
}

void conservation(Outcome& out) {
  GoldenScenario g;
  auto aware = run_carbon_aware(g.job, g.trace, g.profile, g.forecaster, g.cfg);
  auto base = run_baseline(g.job, g.trace, g.profile, g.cfg.period);
  check_conservation(out, aware, g.trace, g.profile, "golden aware");
  check_conservation(out, base, g.trace, g.profile, "golden baseline");
  out.check(aware.total_carbon == GoldenScenario::kAwareCarbon, "golden aware carbon");
  out.check(close_rel(base.total_carbon, GoldenScenario::kBaseCarbon, 1e-12), "golden baseline carbon");

  std::mt19937_64 rng(20230118);
  for (int rep = 0; rep < 100; ++rep) {
    auto s = random_diurnal(rng);
    ForecasterSpec f;
    f.kind = rep % 4 == 0 ? ModelKind::kSvr : ModelKind::kLinear;
    f.oracle = rep % 5 == 0;
    auto r = run_carbon_aware(s.job, s.trace, s.profile, f, s.cfg);
    check_conservation(out, r, s.trace, s.profile, "random " + std::to_string(rep));
  }
  out.note("golden + 100 random scenarios");
}

void forecasting_sanity(Outcome& out) {
  const std::vector<ModelKind> kinds{ModelKind::kLinear, ModelKind::kSvr};
  auto noisy = evaluate_models(synth_trace(SynthParams{}), 48, kinds);
  const double linear = noisy.find(ModelKind::kLinear).mape_pct;
  const double svr = noisy.find(ModelKind::kSvr).mape_pct;
  const double persistence = noisy.find(ModelKind::kPersistence).mape_pct;
  out.check(noisy.test_points == 504, "504 walk-forward predictions");
  out.check(linear <= persistence, "linear <= persistence");
  out.check(svr <= 2.0 * linear, "svr <= 2x linear");
  // Frozen from the first verified run.
  out.check(close_rel(linear, 1.517033668432808, 1e-9), "linear golden " + str(linear));
  out.check(close_rel(svr, 1.687285276645453, 1e-9), "svr golden " + str(svr));
  out.check(close_rel(persistence, 3.045197424263001, 1e-9), "persistence golden " + str(persistence));

  SynthParams clean;
  clean.noise_sigma = 0.0;
  const double clean_linear =
      evaluate_models(synth_trace(clean), 48, kinds).find(ModelKind::kLinear).mape_pct;
  out.check(clean_linear < 0.1, "noiseless linear " + str(clean_linear));
  out.note("MAPE % linear " + str(linear) + ", svr " + str(svr) + ", persistence " +
           str(persistence) + ", noiseless linear " + str(clean_linear));
}

void end_to_end_direction(Outcome& out) {
  // 400..800 g/kWh: a 2:1 swing between the dirtiest and cleanest hours.
  SynthParams sp;
  sp.mean = 600.0;
  sp.amplitude = 200.0;
  sp.length = 6 * 48;
  auto trace = synth_trace(sp);
  // The three-limit worked-example profile. The simulated default GPU over
  // 100..300 W is not used here: at eta=0.9 it sits at 100 W, which is
  // about 38% slower, so the time bound would not hold for it.
  auto profile = three_limit_profile();
  for (std::size_t k = 1; k < profile.size(); ++k) {
    out.check(energy_per_sample(profile, profile[k].limit) >
                  energy_per_sample(profile, profile[k - 1].limit),
              "energy per sample strictly increasing");
  }
  const TrainingJob job{static_cast<std::uint64_t>(2 * 86400 * profile[profile.size() - 1].throughput),
                        trace.start_time() + 86400};
  const auto cfg = config(0.9, 300.0, window_max(trace, {job.start_time - 86400, job.start_time}));
  ForecasterSpec f;  // SVR on the trailing 24 h
  auto aware = run_carbon_aware(job, trace, profile, f, cfg);
  auto base = run_baseline(job, trace, profile, cfg.period);
  const auto s = compare(aware, base);
  out.check(s.carbon_reduction_pct > 0.0, "carbon reduction " + str(s.carbon_reduction_pct));
  out.check(s.time_increase_pct < 25.0, "time increase " + str(s.time_increase_pct));
  // Frozen from the first verified run.
  out.check(close_rel(s.carbon_reduction_pct, kE2eCarbonReductionPct, 1e-9), "carbon golden");
  out.check(close_rel(s.time_increase_pct, kE2eTimeIncreasePct, 1e-9), "time golden");
  out.note("carbon -" + str(s.carbon_reduction_pct) + " %, time +" + str(s.time_increase_pct) + " %");
}

void cost_spot_checks(Outcome& out) {
  out.check(cta(3600.0, 1000.0, 1000.0) == 1000.0, "cta(1 h, 1 kW, 1000 g/kWh) == 1000 g");
  std::mt19937_64 rng(20230119);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const double t = 1.0 + 1e5 * unit(rng);
    const double p = 50.0 + 300.0 * unit(rng);
    const double ci = 1000.0 * unit(rng);
    const double max_p = 300.0 + 200.0 * unit(rng);
    const double max_ci = 100.0 + 900.0 * unit(rng);
    out.check(close_rel(total_cost(t, p, ci, config(1.0, max_p, max_ci)), t * p * ci / 3.6e6, 1e-12),
              "eta=1 is carbon only");
    out.check(close_rel(total_cost(t, p, ci, config(0.0, max_p, max_ci)), t * max_p * max_ci / 3.6e6,
                        1e-12),
              "eta=0 is priced time only");
  }
  out.note("exact cta + 1000 closed-form pairs");
}

void round_trips(Outcome& out) {
  std::mt19937_64 rng(20230120);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::string tag = " " + std::to_string(rep);
    // Traces: arbitrary doubles including subnormal-free extremes of scale.
    std::vector<double> v(1 + rng() % 300);
    const double scale = std::pow(10.0, -3.0 + 7.0 * unit(rng));
    for (auto& x : v) x = scale * unit(rng);
    const std::int64_t interval = 60 * static_cast<std::int64_t>(1 + rng() % 60);
    CarbonTrace t(kMidnight + static_cast<Timestamp>(rng() % 100000), interval, v);
    ParseOptions opts;
    opts.interval = interval;
    out.check(parse_trace(serialize_trace(t, TraceFormat::kCsv), TraceFormat::kCsv, opts) == t,
              "trace csv" + tag);
    out.check(parse_trace(serialize_trace(t, TraceFormat::kJson), TraceFormat::kJson, opts) == t,
              "trace json" + tag);

    auto p = random_profile(rng, rep % 2 == 0);
    out.check(parse_profile(serialize_profile(p)) == p, "profile" + tag);

    SynthParams sp;
    sp.seed = rng();
    sp.mean = 200.0 + 600.0 * unit(rng);
    sp.amplitude = sp.mean * 0.5 * unit(rng);
    sp.noise_sigma = 30.0 * unit(rng);
    sp.length = 48;
    auto data = build_features(synth_trace(sp), 48);
    const auto kind = static_cast<ModelKind>(rep % 3);
    SvrHyperparams h;
    h.c = 0.1 + 10.0 * unit(rng);
    h.epsilon = 0.2 * unit(rng);
    auto model = fit_model(kind, data, 48, h);
    out.check(parse_model(serialize_model(model)) == model, "model" + tag);
  }
  out.note("100 instances each of trace csv/json, profile, model");
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"optimizer matches exhaustive argmin", 5.0, optimizer_oracle},
      {"monotone downshift as intensity rises", 5.0, monotone_downshift},
      {"eta=0 / eta=1 reduction identities", 1.0, reduction_identities},
      {"energy, carbon and sample conservation", 10.0, conservation},
      {"forecasting sanity on synthetic diurnal trace", 30.0, forecasting_sanity},
      {"end-to-end carbon reduction direction", 10.0, end_to_end_direction},
      {"cost formula spot checks", 1.0, cost_spot_checks},
      {"serialization round-trips", 5.0, round_trips},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(out);
    } catch (const std::exception& e) {
      out.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = out.ok() && in_budget;
    failed += pass ? 0 : 1;
    std::printf("%s  %-48s %7.3f s (budget %4.0f s)  %s%s\n", pass ? "PASS" : "FAIL", c.name, secs,
                c.budget_s, out.detail().c_str(), in_budget ? "" : "; over time budget");
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
