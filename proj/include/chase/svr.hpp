#pragma once

#include <array>
#include <span>
#include <vector>

#include "chase/forecast.hpp"

namespace chase {

using FeatureVector = std::array<double, kFeatureCount>;

double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double gamma);

// Epsilon-insensitive SVR with an RBF kernel, solved in the dual by
// sequential minimal optimization with second-order working-set selection.
// Inputs are expected to be standardized. Only rows with a nonzero dual
// coefficient are kept as support vectors.
SvrSolution solve_svr_dual(std::span<const FeatureVector> x, std::span<const double> y,
                           double c, double epsilon, double gamma, double tol,
                           std::int64_t max_iter);

double svr_decision(const SvrSolution& solution, const FeatureVector& x);

}  // namespace chase
