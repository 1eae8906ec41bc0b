#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "chase/error.hpp"
#include "chase/forecast.hpp"
#include "chase/manifest.hpp"
#include "chase/numfmt.hpp"
#include "chase/profile.hpp"
#include "chase/simulator.hpp"
#include "chase/synth.hpp"
#include "chase/trace.hpp"

namespace chase::cli {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

struct SvrFlags {
  SvrHyperparams hyper;

  void attach(CLI::App* cmd) {
    cmd->add_option("--svr-c", hyper.c, "SVR box constraint C")->capture_default_str();
    cmd->add_option("--svr-epsilon", hyper.epsilon, "SVR tube width (standardized units)")
        ->capture_default_str();
    cmd->add_option("--svr-gamma", hyper.gamma, "RBF width; <= 0 picks 1/(3*mean variance)")
        ->capture_default_str();
    cmd->add_option("--svr-tol", hyper.tol, "KKT stopping tolerance")->capture_default_str();
    cmd->add_option("--svr-max-iter", hyper.max_iter, "maximum SMO updates")->capture_default_str();
  }
};

// trace validate ------------------------------------------------------------

struct ValidateArgs {
  std::string path;
  std::string fill = "none";
  std::optional<std::int64_t> interval;
  std::string out;
};

int cmd_trace_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  ParseOptions opts;
  opts.interval = a.interval;
  opts.fill_hold = a.fill == "hold";
  opts.on_fill = [&err](const std::string& msg) { err << "fill: " << msg << "\n"; };
  const auto trace = load_trace(a.path, opts);
  const auto v = trace.intensities();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  out << "ok: " << trace.size() << " points, interval " << trace.interval() << " s, span ["
      << trace.start_time() << "," << trace.end_time() << "), min " << format_real(*lo)
      << ", max " << format_real(*hi) << ", mean " << fixed(mean, 3) << "\n";
  if (!a.out.empty()) write_file(a.out, serialize_trace(trace, format_from_path(a.out)));
  return kExitOk;
}

// trace fetch ---------------------------------------------------------------

struct FetchArgs {
  std::string file;
  std::string url;
  std::string region;
  Timestamp start = 0;
  Timestamp end = 0;
  std::string out;
};

int cmd_trace_fetch(const FetchArgs& a, std::ostream& out, std::ostream&) {
  TraceSource source;
  if (!a.file.empty()) {
    source = FileSource{a.file};
  } else {
    const char* env = std::getenv(kEndpointEnvVar);
    if (a.url.empty() && (env == nullptr || *env == '\0')) {
      throw InputError(std::string("no trace source: pass --file, --url or set ") + kEndpointEnvVar);
    }
    source = HttpSource{a.url, a.region};
  }
  const auto trace = fetch_trace(source, {a.start, a.end});
  if (a.out.empty()) {
    out << serialize_trace(trace, TraceFormat::kCsv);
  } else {
    write_file(a.out, serialize_trace(trace, format_from_path(a.out)));
    out << "fetched " << trace.size() << " points to " << a.out << "\n";
  }
  return kExitOk;
}

// synth-trace ---------------------------------------------------------------

int cmd_synth(const SynthParams& p, const std::string& path, std::ostream& out) {
  const auto trace = synth_trace(p);
  if (path.empty()) {
    out << serialize_trace(trace, TraceFormat::kCsv);
  } else {
    write_file(path, serialize_trace(trace, format_from_path(path)));
    out << "wrote " << trace.size() << " points to " << path << "\n";
  }
  return kExitOk;
}

// profile gen ---------------------------------------------------------------

struct ProfileGenArgs {
  std::vector<PowerLimit> limits = default_power_limits();
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_profile_gen(const ProfileGenArgs& a, std::ostream& out) {
  const auto profile = profile_gpu(default_gpu(), a.limits, {a.noise_sigma, a.seed});
  if (a.out.empty()) {
    out << serialize_profile(profile);
  } else {
    write_file(a.out, serialize_profile(profile));
    out << "wrote " << profile.size() << " entries to " << a.out << "\n";
  }
  return kExitOk;
}

// forecast eval -------------------------------------------------------------

struct EvalArgs {
  std::string trace;
  std::int64_t fit_hours = 24;
  std::vector<std::string> models{"linear", "svr"};
  SvrFlags svr;
  bool json = false;
  std::string out_dir;
};

nlohmann::json eval_json(const EvalReport& r, std::int64_t fit_hours) {
  nlohmann::json doc;
  doc["fit_hours"] = fit_hours;
  doc["fit_points"] = r.fit_points;
  doc["test_points"] = r.test_points;
  doc["test_start"] = r.test_start;
  doc["actual"] = r.actual;
  auto& models = doc["models"] = nlohmann::json::array();
  for (const auto& m : r.models) {
    models.push_back({{"model", to_string(m.kind)},
                      {"mape_pct", m.mape_pct},
                      {"converged", m.converged},
                      {"predictions", m.predictions}});
  }
  return doc;
}

int cmd_forecast_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const auto trace = load_trace(a.trace);
  if (a.fit_hours <= 0 || (a.fit_hours * 3600) % trace.interval() != 0) {
    throw InputError("fit window of " + std::to_string(a.fit_hours) +
                     " h is not a whole number of trace steps");
  }
  const auto fit_window = static_cast<std::size_t>(a.fit_hours * 3600 / trace.interval());
  std::vector<ModelKind> kinds;
  for (const auto& m : a.models) kinds.push_back(model_kind_from_string(m));
  const auto report = evaluate_models(trace, fit_window, kinds, a.svr.hyper);
  const auto doc = eval_json(report, a.fit_hours);
  for (const auto& m : report.models) {
    if (!m.converged) err << "warning: " << to_string(m.kind) << " solver hit max_iter\n";
  }
  if (!a.out_dir.empty()) {
    write_file(std::filesystem::path(a.out_dir) / "forecast_eval.json", doc.dump(2) + "\n");
  }
  if (a.json) {
    out << doc.dump(2) << "\n";
    return kExitOk;
  }
  out << "fit: " << report.fit_points << " points (" << a.fit_hours << " h), test: "
      << report.test_points << " one-step predictions from t=" << report.test_start << "\n";
  out << std::left << std::setw(14) << "model" << std::right << std::setw(10) << "MAPE %" << "\n";
  for (const auto& m : report.models) {
    out << std::left << std::setw(14) << to_string(m.kind) << std::right << std::setw(10)
        << fixed(m.mape_pct, 4) << "\n";
  }
  return kExitOk;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string manifest;
  std::optional<double> eta;
  std::optional<std::int64_t> period_s;
  std::optional<double> max_power_w;
  std::optional<double> max_ci;
  std::optional<std::int64_t> fit_hours;
  std::optional<std::string> model;
  bool baseline = false;
  bool oracle = false;
  bool count_profiling = false;
  std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
  auto m = load_manifest(a.manifest);
  if (a.eta) m.eta = *a.eta;
  if (a.period_s) m.period_s = *a.period_s;
  if (a.max_power_w) m.max_power_w = *a.max_power_w;
  if (a.max_ci) m.max_ci = *a.max_ci;
  if (a.fit_hours) m.forecaster.fit_hours = *a.fit_hours;
  if (a.model) m.forecaster.kind = model_kind_from_string(*a.model);
  m.baseline = m.baseline || a.baseline;
  m.forecaster.oracle = m.forecaster.oracle || a.oracle;
  m.count_profiling = m.count_profiling || a.count_profiling;
  if (!a.out_dir.empty()) m.out_dir = a.out_dir;
  validate_manifest(m);

  const auto trace = load_trace(m.trace_path);
  const auto profile = load_profile(m.profile_path);
  const TrainingJob job{m.total_samples,
                        m.start_time.value_or(trace.start_time() + m.forecaster.fit_hours * 3600)};
  OptimizerConfig cfg;
  cfg.eta = m.eta;
  cfg.period = m.period_s.value_or(trace.interval());
  cfg.max_power = m.max_power_w.value_or(static_cast<double>(profile.max_limit()));
  cfg.max_carbon_intensity =
      m.max_ci ? *m.max_ci : window_max(trace, {job.start_time - kSecondsPerDay, job.start_time});

  const SimReport report =
      m.baseline ? run_baseline(job, trace, profile, cfg.period)
                 : run_carbon_aware(job, trace, profile, m.forecaster, cfg,
                                    SimOptions{m.count_profiling});
  const std::filesystem::path dir(m.out_dir);
  write_file(dir / "report.json", serialize_report(report));
  write_file(dir / "timeline.csv", emit_timeline(report));
  out << "mode=" << to_string(report.mode) << " periods=" << report.periods.size()
      << " time_s=" << format_real(report.total_time)
      << " energy_j=" << format_real(report.total_energy)
      << " carbon_g=" << format_real(report.total_carbon) << "\n";
  return kExitOk;
}

// compare -------------------------------------------------------------------

struct CompareArgs {
  std::string aware;
  std::string baseline;
  bool json = false;
  std::string out_dir;
};

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream&) {
  const auto aware = parse_report(read_file(a.aware));
  const auto base = parse_report(read_file(a.baseline));
  const auto summary = compare(aware, base);
  const auto doc = serialize_summary(summary);
  if (!a.out_dir.empty()) write_file(std::filesystem::path(a.out_dir) / "compare.json", doc);
  if (a.json) {
    out << doc;
    return kExitOk;
  }
  out << "carbon_reduction_pct " << fixed(summary.carbon_reduction_pct, 4) << "\n"
      << "energy_reduction_pct " << fixed(summary.energy_reduction_pct, 4) << "\n"
      << "time_increase_pct    " << fixed(summary.time_increase_pct, 4) << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Carbon-aware GPU power-limit control: traces, forecasting, simulation"};
  app.name("chase");
  app.require_subcommand(1);

  auto* trace_cmd = app.add_subcommand("trace", "Fetch or validate carbon-intensity traces");
  trace_cmd->require_subcommand(1);

  ValidateArgs validate;
  auto* validate_cmd = trace_cmd->add_subcommand("validate", "Parse and check a trace file");
  validate_cmd->add_option("path", validate.path, "CSV or JSON trace")->required();
  validate_cmd->add_option("--fill", validate.fill, "gap policy: none or hold")
      ->check(CLI::IsMember({"none", "hold"}))
      ->capture_default_str();
  validate_cmd->add_option("--interval", validate.interval, "expected interval in seconds");
  validate_cmd->add_option("--out", validate.out, "write the normalized trace here");

  FetchArgs fetch;
  auto* fetch_cmd = trace_cmd->add_subcommand("fetch", "Retrieve a trace window");
  fetch_cmd->add_option("--file", fetch.file, "read from a local trace file");
  fetch_cmd->add_option("--url", fetch.url, "HTTP JSON endpoint (overridden by " +
                                                std::string(kEndpointEnvVar) + ")");
  fetch_cmd->add_option("--region", fetch.region, "opaque region identifier");
  fetch_cmd->add_option("--start", fetch.start, "window start, epoch seconds")->required();
  fetch_cmd->add_option("--end", fetch.end, "window end, epoch seconds")->required();
  fetch_cmd->add_option("--out", fetch.out, "output path (.csv or .json)");

  auto* forecast_cmd = app.add_subcommand("forecast", "Forecaster evaluation");
  forecast_cmd->require_subcommand(1);
  EvalArgs eval;
  auto* eval_cmd = forecast_cmd->add_subcommand("eval", "Walk-forward one-step MAPE per model");
  eval_cmd->add_option("trace", eval.trace, "trace file")->required();
  eval_cmd->add_option("--fit-hours", eval.fit_hours, "history used for fitting")
      ->capture_default_str();
  eval_cmd->add_option("--model", eval.models, "linear, svr or persistence (repeatable)")
      ->capture_default_str();
  eval.svr.attach(eval_cmd);
  eval_cmd->add_flag("--json", eval.json, "print JSON instead of a table");
  eval_cmd->add_option("--out-dir", eval.out_dir, "also write forecast_eval.json here");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Replay a job described by a manifest");
  sim_cmd->add_option("manifest", sim.manifest, "run manifest (JSON)")->required();
  sim_cmd->add_option("--eta", sim.eta, "carbon/time trade-off in [0,1]");
  sim_cmd->add_option("--period-s", sim.period_s, "seconds between re-optimizations");
  sim_cmd->add_option("--max-power-w", sim.max_power_w, "cost normalization power");
  sim_cmd->add_option("--max-ci", sim.max_ci, "cost normalization intensity");
  sim_cmd->add_option("--fit-hours", sim.fit_hours, "history used for fitting");
  sim_cmd->add_option("--model", sim.model, "linear, svr or persistence");
  sim_cmd->add_flag("--baseline", sim.baseline, "run at the maximum limit throughout");
  sim_cmd->add_flag("--oracle-forecast", sim.oracle, "use true period intensities");
  sim_cmd->add_flag("--count-profiling", sim.count_profiling,
                    "charge one trace step per profiled limit before the job");
  sim_cmd->add_option("--out-dir", sim.out_dir, "directory for report.json and timeline.csv");

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Percent change of a run against a baseline");
  cmp_cmd->add_option("aware", cmp.aware, "carbon-aware report.json")->required();
  cmp_cmd->add_option("baseline", cmp.baseline, "baseline report.json")->required();
  cmp_cmd->add_flag("--json", cmp.json, "print JSON instead of text");
  cmp_cmd->add_option("--out-dir", cmp.out_dir, "also write compare.json here");

  SynthParams synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth-trace", "Seeded sinusoid-plus-noise trace");
  synth_cmd->add_option("--mean", synth.mean)->capture_default_str();
  synth_cmd->add_option("--amplitude", synth.amplitude)->capture_default_str();
  synth_cmd->add_option("--period", synth.period_steps, "cycle length in steps")
      ->capture_default_str();
  synth_cmd->add_option("--noise-sigma", synth.noise_sigma)->capture_default_str();
  synth_cmd->add_option("--length", synth.length, "number of samples")->capture_default_str();
  synth_cmd->add_option("--interval", synth.interval, "seconds per step")->capture_default_str();
  synth_cmd->add_option("--start", synth.start_time, "first timestamp, epoch seconds")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "output path (.csv or .json)");

  auto* profile_cmd = app.add_subcommand("profile", "Power/throughput profiles");
  profile_cmd->require_subcommand(1);
  ProfileGenArgs pgen;
  auto* pgen_cmd = profile_cmd->add_subcommand("gen", "Profile the built-in simulated GPU");
  pgen_cmd->add_option("--limits", pgen.limits, "power limits in W")->delimiter(',');
  pgen_cmd->add_option("--noise-sigma", pgen.noise_sigma, "relative measurement noise")
      ->capture_default_str();
  pgen_cmd->add_option("--seed", pgen.seed)->capture_default_str();
  pgen_cmd->add_option("--out", pgen.out, "output profile JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (validate_cmd->parsed()) return cmd_trace_validate(validate, out, err);
    if (fetch_cmd->parsed()) return cmd_trace_fetch(fetch, out, err);
    if (eval_cmd->parsed()) return cmd_forecast_eval(eval, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(sim, out, err);
    if (cmp_cmd->parsed()) return cmd_compare(cmp, out, err);
    if (synth_cmd->parsed()) return cmd_synth(synth, synth_out, out);
    if (pgen_cmd->parsed()) return cmd_profile_gen(pgen, out);
  } catch (const SimulationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace chase::cli
