#include "chase/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "chase/error.hpp"
#include "chase/svr.hpp"

namespace chase {

namespace {

constexpr double kRidge = 1e-8;
constexpr std::size_t kLinearParams = kFeatureCount + 1;

using Matrix4 = std::array<std::array<double, kLinearParams>, kLinearParams>;
using Vector4 = std::array<double, kLinearParams>;

// Cholesky solve; returns false when a pivot does not exceed floor.
bool cholesky_solve(Matrix4 a, Vector4 b, double floor, Vector4& out) {
  for (std::size_t j = 0; j < kLinearParams; ++j) {
    double d = a[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j][k] * a[j][k];
    if (!(d > floor)) return false;
    a[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < kLinearParams; ++i) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i][k] * a[j][k];
      a[i][j] = s / a[j][j];
    }
  }
  for (std::size_t i = 0; i < kLinearParams; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i][k] * b[k];
    b[i] = s / a[i][i];
  }
  for (std::size_t i = kLinearParams; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < kLinearParams; ++k) s -= a[k][i] * b[k];
    b[i] = s / a[i][i];
  }
  out = b;
  return true;
}

struct Standardized {
  std::vector<FeatureVector> x;
  std::vector<double> y;
};

ForecastModel scaled_model(const TrainingSet& data, std::int64_t steps_per_day, ModelKind kind,
                           Standardized& out) {
  if (data.rows.size() != data.targets.size()) {
    throw InputError("feature/target length mismatch");
  }
  if (steps_per_day <= 0) throw InputError("steps_per_day must be positive");
  ForecastModel model;
  model.kind = kind;
  model.steps_per_day = steps_per_day;
  const std::size_t n = data.rows.size();
  std::vector<double> column(n);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    for (std::size_t i = 0; i < n; ++i) column[i] = data.rows[i].values()[f];
    model.feature_scaler[f] = fit_standardizer(column);
  }
  model.target_scaler = fit_standardizer(data.targets);
  out.x.resize(n);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto raw = data.rows[i].values();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      out.x[i][f] = model.feature_scaler[f].apply(raw[f]);
    }
    out.y[i] = model.target_scaler.apply(data.targets[i]);
  }
  return model;
}

FeatureVector standardize(const ForecastModel& model, const FeatureRow& row) {
  const auto raw = row.values();
  FeatureVector z{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) z[f] = model.feature_scaler[f].apply(raw[f]);
  return z;
}

nlohmann::json scaler_json(const Standardizer& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}};
}

Standardizer scaler_from(const nlohmann::json& j) {
  Standardizer s{j.at("mean").get<double>(), j.at("stddev").get<double>()};
  if (!(s.stddev > 0)) throw InputError("model scaler stddev must be positive");
  return s;
}

}  // namespace

std::int64_t steps_per_day_for(std::int64_t interval) {
  if (interval <= 0 || kSecondsPerDay % interval != 0) {
    throw InputError("interval " + std::to_string(interval) + " s does not divide a day");
  }
  return kSecondsPerDay / interval;
}

std::int64_t step_of_day(Timestamp t, std::int64_t interval) {
  auto sod = t % kSecondsPerDay;
  if (sod < 0) sod += kSecondsPerDay;
  return sod / interval;
}

FeatureRow time_features(std::int64_t step, std::int64_t steps_per_day, double prev) {
  if (steps_per_day <= 0) throw InputError("steps_per_day must be positive");
  auto phase = step % steps_per_day;
  if (phase < 0) phase += steps_per_day;
  const double angle =
      2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(steps_per_day);
  return {std::sin(angle), std::cos(angle), prev};
}

TrainingSet build_features(const CarbonTrace& trace, std::int64_t steps_per_day) {
  if (trace.size() < 2) throw InputError("trace too short to build features");
  if (steps_per_day <= 0) throw InputError("steps_per_day must be a positive integer");
  if (steps_per_day != steps_per_day_for(trace.interval())) {
    throw InputError("steps_per_day " + std::to_string(steps_per_day) +
                     " inconsistent with interval " + std::to_string(trace.interval()));
  }
  TrainingSet out;
  out.rows.reserve(trace.size() - 1);
  out.targets.reserve(trace.size() - 1);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    out.rows.push_back(
        time_features(step_of_day(trace.time_at(i), trace.interval()), steps_per_day, trace[i - 1]));
    out.targets.push_back(trace[i]);
  }
  return out;
}

Standardizer fit_standardizer(std::span<const double> values) {
  if (values.empty()) throw InputError("cannot standardize an empty column");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double sd = std::sqrt(var);
  // Relative floor so round-off on a constant column does not count as spread.
  const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
  return {mean, constant ? 1.0 : sd};
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinear: return "linear";
    case ModelKind::kSvr: return "svr";
    case ModelKind::kPersistence: return "persistence";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "svr") return ModelKind::kSvr;
  if (name == "persistence") return ModelKind::kPersistence;
  throw InputError("unknown model '" + name + "' (expected linear, svr or persistence)");
}

ForecastModel fit_linear(const TrainingSet& data, std::int64_t steps_per_day) {
  if (data.rows.size() < 4) throw InputError("linear fit needs at least 4 rows");
  Standardized z;
  ForecastModel model = scaled_model(data, steps_per_day, ModelKind::kLinear, z);

  Matrix4 gram{};
  Vector4 rhs{};
  for (std::size_t i = 0; i < z.x.size(); ++i) {
    const Vector4 row{1.0, z.x[i][0], z.x[i][1], z.x[i][2]};
    for (std::size_t a = 0; a < kLinearParams; ++a) {
      rhs[a] += row[a] * z.y[i];
      for (std::size_t b = 0; b < kLinearParams; ++b) gram[a][b] += row[a] * row[b];
    }
  }
  double max_diag = 1.0;
  for (std::size_t k = 0; k < kLinearParams; ++k) max_diag = std::max(max_diag, gram[k][k]);
  Vector4 beta{};
  if (!cholesky_solve(gram, rhs, 1e-10 * max_diag, beta)) {
    // Pivots of a ridge-shifted matrix are bounded below by the shift.
    for (std::size_t k = 0; k < kLinearParams; ++k) gram[k][k] += kRidge;
    if (!cholesky_solve(gram, rhs, 0.5 * kRidge, beta)) {
      throw InputError("linear fit is rank-deficient even with ridge regularization");
    }
  }
  model.linear.bias = beta[0];
  for (std::size_t f = 0; f < kFeatureCount; ++f) model.linear.weights[f] = beta[f + 1];
  return model;
}

ForecastModel fit_svr(const TrainingSet& data, std::int64_t steps_per_day,
                      const SvrHyperparams& hyper) {
  if (data.rows.size() < 2) throw InputError("SVR fit needs at least 2 rows");
  Standardized z;
  ForecastModel model = scaled_model(data, steps_per_day, ModelKind::kSvr, z);
  double gamma = hyper.gamma;
  if (!(gamma > 0)) {
    double mean_var = 0.0;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      double m = 0.0;
      for (const auto& x : z.x) m += x[f];
      m /= static_cast<double>(z.x.size());
      double v = 0.0;
      for (const auto& x : z.x) v += (x[f] - m) * (x[f] - m);
      mean_var += v / static_cast<double>(z.x.size());
    }
    mean_var /= static_cast<double>(kFeatureCount);
    gamma = mean_var > 0 ? 1.0 / (static_cast<double>(kFeatureCount) * mean_var)
                         : 1.0 / static_cast<double>(kFeatureCount);
  }
  model.svr = solve_svr_dual(z.x, z.y, hyper.c, hyper.epsilon, gamma, hyper.tol, hyper.max_iter);
  return model;
}

ForecastModel make_persistence(std::int64_t steps_per_day) {
  if (steps_per_day <= 0) throw InputError("steps_per_day must be positive");
  ForecastModel model;
  model.kind = ModelKind::kPersistence;
  model.steps_per_day = steps_per_day;
  return model;
}

ForecastModel fit_model(ModelKind kind, const TrainingSet& data, std::int64_t steps_per_day,
                        const SvrHyperparams& hyper) {
  switch (kind) {
    case ModelKind::kLinear: return fit_linear(data, steps_per_day);
    case ModelKind::kSvr: return fit_svr(data, steps_per_day, hyper);
    case ModelKind::kPersistence: return make_persistence(steps_per_day);
  }
  throw InputError("unknown model kind");
}

double predict_one(const ForecastModel& model, std::int64_t step, double prev) {
  if (model.kind == ModelKind::kPersistence) return std::max(prev, 0.0);
  const FeatureVector z = standardize(model, time_features(step, model.steps_per_day, prev));
  double out;
  if (model.kind == ModelKind::kLinear) {
    out = model.linear.bias;
    for (std::size_t f = 0; f < kFeatureCount; ++f) out += model.linear.weights[f] * z[f];
  } else {
    out = svr_decision(model.svr, z);
  }
  return std::max(model.target_scaler.invert(out), 0.0);
}

std::vector<double> forecast_horizon(const ForecastModel& model, std::int64_t start_step,
                                     double prev, std::size_t n) {
  if (n == 0) throw InputError("forecast horizon must be at least one step");
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    prev = predict_one(model, start_step + static_cast<std::int64_t>(k), prev);
    out.push_back(prev);
  }
  return out;
}

double mape(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw InputError("MAPE: length mismatch");
  if (actual.empty()) throw InputError("MAPE: empty series");
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) {
      throw InputError("MAPE: actual value is zero at index " + std::to_string(i));
    }
    sum += std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
  }
  return 100.0 * sum / static_cast<double>(actual.size());
}

const ModelEvaluation& EvalReport::find(ModelKind kind) const {
  for (const auto& m : models) {
    if (m.kind == kind) return m;
  }
  throw InputError("model " + to_string(kind) + " not in report");
}

EvalReport evaluate_models(const CarbonTrace& trace, std::size_t fit_window,
                           std::span<const ModelKind> kinds, const SvrHyperparams& hyper) {
  if (fit_window < 2 || trace.size() <= fit_window + 1) {
    throw InputError("insufficient data: " + std::to_string(trace.size()) +
                     " samples for fit window " + std::to_string(fit_window));
  }
  const auto steps = steps_per_day_for(trace.interval());
  const CarbonTrace fit_part(trace.start_time(), trace.interval(),
                             {trace.intensities().begin(),
                              trace.intensities().begin() + static_cast<std::ptrdiff_t>(fit_window)});
  const TrainingSet training = build_features(fit_part, steps);

  EvalReport report;
  report.fit_points = fit_window;
  report.test_points = trace.size() - fit_window;
  report.test_start = trace.time_at(fit_window);
  report.actual.assign(trace.intensities().begin() + static_cast<std::ptrdiff_t>(fit_window),
                       trace.intensities().end());

  std::vector<ModelKind> order(kinds.begin(), kinds.end());
  if (std::find(order.begin(), order.end(), ModelKind::kPersistence) == order.end()) {
    order.push_back(ModelKind::kPersistence);
  }
  for (ModelKind kind : order) {
    const ForecastModel model = fit_model(kind, training, steps, hyper);
    ModelEvaluation eval{kind, 0.0, {}, kind != ModelKind::kSvr || model.svr.converged};
    eval.predictions.reserve(report.test_points);
    for (std::size_t i = fit_window; i < trace.size(); ++i) {
      eval.predictions.push_back(
          predict_one(model, step_of_day(trace.time_at(i), trace.interval()), trace[i - 1]));
    }
    eval.mape_pct = mape(report.actual, eval.predictions);
    report.models.push_back(std::move(eval));
  }
  return report;
}

std::string serialize_model(const ForecastModel& model) {
  nlohmann::json doc;
  doc["kind"] = to_string(model.kind);
  doc["steps_per_day"] = model.steps_per_day;
  auto& fs = doc["feature_scaler"] = nlohmann::json::array();
  for (const auto& s : model.feature_scaler) fs.push_back(scaler_json(s));
  doc["target_scaler"] = scaler_json(model.target_scaler);
  if (model.kind == ModelKind::kLinear) {
    doc["linear"] = {{"bias", model.linear.bias}, {"weights", model.linear.weights}};
  } else if (model.kind == ModelKind::kSvr) {
    const auto& s = model.svr;
    doc["svr"] = {{"support_vectors", s.support_vectors},
                  {"dual_coefficients", s.dual_coefficients},
                  {"bias", s.bias},
                  {"gamma", s.gamma},
                  {"C", s.c},
                  {"epsilon", s.epsilon},
                  {"iterations", s.iterations},
                  {"converged", s.converged}};
  }
  return doc.dump(2) + "\n";
}

ForecastModel parse_model(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    ForecastModel model;
    model.kind = model_kind_from_string(doc.at("kind").get<std::string>());
    model.steps_per_day = doc.at("steps_per_day").get<std::int64_t>();
    if (model.steps_per_day <= 0) throw InputError("steps_per_day must be positive");
    const auto& fs = doc.at("feature_scaler");
    if (!fs.is_array() || fs.size() != kFeatureCount) {
      throw InputError("feature_scaler must hold 3 entries");
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) model.feature_scaler[f] = scaler_from(fs[f]);
    model.target_scaler = scaler_from(doc.at("target_scaler"));
    if (model.kind == ModelKind::kLinear) {
      const auto& lin = doc.at("linear");
      model.linear.bias = lin.at("bias").get<double>();
      model.linear.weights = lin.at("weights").get<std::array<double, kFeatureCount>>();
    } else if (model.kind == ModelKind::kSvr) {
      const auto& j = doc.at("svr");
      auto& s = model.svr;
      s.support_vectors = j.at("support_vectors").get<std::vector<FeatureVector>>();
      s.dual_coefficients = j.at("dual_coefficients").get<std::vector<double>>();
      s.bias = j.at("bias").get<double>();
      s.gamma = j.at("gamma").get<double>();
      s.c = j.at("C").get<double>();
      s.epsilon = j.at("epsilon").get<double>();
      s.iterations = j.value("iterations", std::int64_t{0});
      s.converged = j.value("converged", true);
      if (s.support_vectors.size() != s.dual_coefficients.size()) {
        throw InputError("support vector / dual coefficient count mismatch");
      }
      for (double a : s.dual_coefficients) {
        if (std::abs(a) > s.c) throw InputError("dual coefficient exceeds box constraint C");
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace chase
