#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chase/trace.hpp"

namespace chase {

constexpr std::size_t kFeatureCount = 3;

// Inputs to the one-step regression: time of day on the unit circle plus the
// previous observation.
struct FeatureRow {
  double sin_time = 0.0;
  double cos_time = 1.0;
  double prev_intensity = 0.0;

  std::array<double, kFeatureCount> values() const {
    return {sin_time, cos_time, prev_intensity};
  }
};

struct TrainingSet {
  std::vector<FeatureRow> rows;
  std::vector<double> targets;
};

// Step-of-day index of an absolute time, anchored at midnight UTC.
std::int64_t step_of_day(Timestamp t, std::int64_t interval);

// Number of trace steps in a day; throws unless interval divides 86400.
std::int64_t steps_per_day_for(std::int64_t interval);

FeatureRow time_features(std::int64_t step, std::int64_t steps_per_day, double prev);

// Row i pairs the features of sample i+1 with target intensities[i+1].
TrainingSet build_features(const CarbonTrace& trace, std::int64_t steps_per_day);

// z-score transform; zero-variance inputs keep unit scale.
struct Standardizer {
  double mean = 0.0;
  double stddev = 1.0;

  double apply(double x) const { return (x - mean) / stddev; }
  double invert(double z) const { return z * stddev + mean; }
  bool operator==(const Standardizer&) const = default;
};

Standardizer fit_standardizer(std::span<const double> values);

enum class ModelKind { kLinear, kSvr, kPersistence };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct SvrHyperparams {
  double c = 1.0;
  double epsilon = 0.1;
  double gamma = 0.0;  // <= 0 selects 1 / (3 * mean feature variance)
  double tol = 1e-3;
  std::int64_t max_iter = 10000;
};

struct LinearCoefficients {
  double bias = 0.0;
  std::array<double, kFeatureCount> weights{};
  bool operator==(const LinearCoefficients&) const = default;
};

struct SvrSolution {
  std::vector<std::array<double, kFeatureCount>> support_vectors;  // standardized
  std::vector<double> dual_coefficients;                           // alpha - alpha*
  double bias = 0.0;
  double gamma = 0.0;
  double c = 0.0;
  double epsilon = 0.0;
  std::int64_t iterations = 0;
  bool converged = true;
  bool operator==(const SvrSolution&) const = default;
};

// A fitted one-step regressor over standardized features and target.
struct ForecastModel {
  ModelKind kind = ModelKind::kLinear;
  std::int64_t steps_per_day = 48;
  std::array<Standardizer, kFeatureCount> feature_scaler{};
  Standardizer target_scaler{};
  LinearCoefficients linear{};
  SvrSolution svr{};

  bool operator==(const ForecastModel&) const = default;
};

ForecastModel fit_linear(const TrainingSet& data, std::int64_t steps_per_day);
ForecastModel fit_svr(const TrainingSet& data, std::int64_t steps_per_day,
                      const SvrHyperparams& hyper = {});
ForecastModel make_persistence(std::int64_t steps_per_day);

ForecastModel fit_model(ModelKind kind, const TrainingSet& data, std::int64_t steps_per_day,
                        const SvrHyperparams& hyper = {});

// Model output in g/kWh, clamped below at zero.
double predict_one(const ForecastModel& model, std::int64_t step, double prev);

// Recursive forecasts for steps start_step .. start_step+n-1.
std::vector<double> forecast_horizon(const ForecastModel& model, std::int64_t start_step,
                                     double prev, std::size_t n);

// Mean absolute percentage error, in percent.
double mape(std::span<const double> actual, std::span<const double> predicted);

struct ModelEvaluation {
  ModelKind kind;
  double mape_pct = 0.0;
  std::vector<double> predictions;
  bool converged = true;
};

struct EvalReport {
  std::size_t fit_points = 0;
  std::size_t test_points = 0;
  Timestamp test_start = 0;
  std::vector<double> actual;
  std::vector<ModelEvaluation> models;

  const ModelEvaluation& find(ModelKind kind) const;
};

// Fits on the first fit_window samples and walks forward one step at a time
// over the rest, always feeding the true previous observation. A persistence
// baseline is always appended when not requested explicitly.
EvalReport evaluate_models(const CarbonTrace& trace, std::size_t fit_window,
                           std::span<const ModelKind> kinds, const SvrHyperparams& hyper = {});

std::string serialize_model(const ForecastModel& model);
ForecastModel parse_model(const std::string& text);

}  // namespace chase
