#include "chase/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chase/error.hpp"
#include "chase/kernels.hpp"

namespace chase {

namespace {

constexpr double kTau = 1e-12;

// Variables 0..n-1 are alpha (sign +1), n..2n-1 are alpha* (sign -1).
class SmoSolver {
 public:
  SmoSolver(std::vector<double> gram, std::span<const double> y, double c, double epsilon)
      : n_(y.size()), gram_(std::move(gram)), c_(c), alpha_(2 * n_, 0.0), grad_(2 * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      grad_[i] = epsilon - y[i];
      grad_[i + n_] = epsilon + y[i];
    }
  }

  // Returns true once the maximal violating pair is within tol; otherwise
  // optimizes that pair when update is set.
  bool step(double tol, bool update_pair = true) {
    const std::size_t m = 2 * n_;
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < m; ++t) {
      if (sign(t) > 0) {
        if (!at_upper(t) && -grad_[t] >= gmax) {
          gmax = -grad_[t];
          i = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!at_lower(t) && grad_[t] >= gmax) {
        gmax = grad_[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < m; ++t) {
      double grad_diff;
      double quad;
      if (sign(t) > 0) {
        if (at_lower(t)) continue;
        grad_diff = gmax + grad_[t];
        gmax2 = std::max(gmax2, grad_[t]);
        if (i < 0 || grad_diff <= 0) continue;
        quad = q(i, i) + q(t, t) - 2.0 * sign(i) * q(i, t);
      } else {
        if (at_upper(t)) continue;
        grad_diff = gmax - grad_[t];
        gmax2 = std::max(gmax2, -grad_[t]);
        if (i < 0 || grad_diff <= 0) continue;
        quad = q(i, i) + q(t, t) + 2.0 * sign(i) * q(i, t);
      }
      double gain = -(grad_diff * grad_diff) / (quad > 0 ? quad : kTau);
      if (gain <= best) {
        best = gain;
        j = static_cast<std::ptrdiff_t>(t);
      }
    }
    violation_ = gmax + gmax2;
    if (i < 0 || j < 0 || violation_ < tol) return true;
    if (!update_pair) return false;
    update(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return false;
  }

  double violation() const { return violation_; }

  double rho() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      const double yg = sign(t) * grad_[t];
      if (at_upper(t)) {
        if (sign(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (at_lower(t)) {
        if (sign(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        ++free;
        sum_free += yg;
      }
    }
    return free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
  }

  double coefficient(std::size_t k) const { return alpha_[k] - alpha_[k + n_]; }

 private:
  double sign(std::size_t t) const { return t < n_ ? 1.0 : -1.0; }
  double sign(std::ptrdiff_t t) const { return sign(static_cast<std::size_t>(t)); }
  bool at_upper(std::size_t t) const { return alpha_[t] >= c_; }
  bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }

  double q(std::size_t a, std::size_t b) const {
    return sign(a) * sign(b) * gram_[(a % n_) * n_ + (b % n_)];
  }
  double q(std::ptrdiff_t a, std::size_t b) const { return q(static_cast<std::size_t>(a), b); }
  double q(std::ptrdiff_t a, std::ptrdiff_t b) const {
    return q(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }

  void update(std::size_t i, std::size_t j) {
    const double old_i = alpha_[i];
    const double old_j = alpha_[j];
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    if (sign(i) != sign(j)) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) { aj = 0; ai = diff; }
      } else if (ai < 0) {
        ai = 0; aj = -diff;
      }
      if (diff > 0) {
        if (ai > c_) { ai = c_; aj = c_ - diff; }
      } else if (aj > c_) {
        aj = c_; ai = c_ + diff;
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c_) {
        if (ai > c_) { ai = c_; aj = sum - c_; }
      } else if (aj < 0) {
        aj = 0; ai = sum;
      }
      if (sum > c_) {
        if (aj > c_) { aj = c_; ai = sum - c_; }
      } else if (ai < 0) {
        ai = 0; aj = sum;
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    for (std::size_t t = 0; t < 2 * n_; ++t) {
      grad_[t] += q(i, t) * di + q(j, t) * dj;
    }
  }

  std::size_t n_;
  std::vector<double> gram_;
  double c_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  double violation_ = std::numeric_limits<double>::infinity();
};

}  // namespace

double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

SvrSolution solve_svr_dual(std::span<const FeatureVector> x, std::span<const double> y,
                           double c, double epsilon, double gamma, double tol,
                           std::int64_t max_iter) {
  if (x.size() != y.size()) throw InputError("SVR: feature/target length mismatch");
  if (x.size() < 2) throw InputError("SVR: need at least 2 rows");
  if (!(c > 0) || !(epsilon >= 0) || !(gamma > 0) || !(tol > 0) || max_iter <= 0) {
    throw InputError("SVR: require C>0, epsilon>=0, gamma>0, tol>0, max_iter>0");
  }
  SmoSolver solver(rbf_gram(x, gamma), y, c, epsilon);
  SvrSolution out;
  out.gamma = gamma;
  out.c = c;
  out.epsilon = epsilon;
  out.converged = false;
  for (std::int64_t it = 0; it < max_iter; ++it) {
    if (solver.step(tol)) {
      out.converged = true;
      break;
    }
    out.iterations = it + 1;
  }
  if (!out.converged) out.converged = solver.step(tol, false);
  out.bias = -solver.rho();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double coef = solver.coefficient(k);
    if (coef != 0.0) {
      out.support_vectors.push_back(x[k]);
      out.dual_coefficients.push_back(coef);
    }
  }
  return out;
}

double svr_decision(const SvrSolution& solution, const FeatureVector& x) {
  double f = solution.bias;
  for (std::size_t k = 0; k < solution.support_vectors.size(); ++k) {
    f += solution.dual_coefficients[k] * rbf_kernel(solution.support_vectors[k], x, solution.gamma);
  }
  return f;
}

}  // namespace chase
