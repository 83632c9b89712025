#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "esb/core.hpp"
#include "esb/linalg.hpp"

namespace esb {

/// Regressor matrix with a leading intercept column, row-major, T x k.
struct Design {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  static Design intercept_only(std::size_t t);
  /// Columns [1, x_t].
  static Design intercept_and(const std::vector<double>& x);

  const double* row(std::size_t t) const { return data.data() + t * cols; }

  double dot(std::size_t t, const double* theta) const {
    const double* r = row(t);
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += r[j] * theta[j];
    return s;
  }
};

/// Strictly consistent joint loss for (quantile, ES) at level tau,
/// the 0-homogeneous member of the family: adding log(c) under a common
/// positive rescaling of (y, q, e) is its only scale response.
/// Requires e < 0.
double fz0_loss(double y, double q, double e, double tau);

/// Analytic d/de of fz0_loss.
double fz0_loss_de(double y, double q, double e, double tau);

/// Mean loss over the sample for stacked coefficients
/// theta = [theta_q (k), theta_e (k)]. Parameter vectors giving a
/// non-negative fitted ES anywhere are infeasible and map to +infinity,
/// which any minimizer treats as strictly worse than every feasible point.
double average_loss(const ReturnSeries& y, const Design& x,
                    const std::vector<double>& theta, ProbabilityLevel tau);

struct FitOptions {
  int restarts = 10;
  double simplex_tol = 1e-8;   // simplex diameter defining convergence
  double restart_tol = 1e-10;  // loss improvement across restarts
  int max_iter = 4000;         // Nelder-Mead iterations per start
  std::optional<std::vector<double>> start;  // warm start, size 2k
};

struct JointFit {
  std::vector<double> theta_q;
  std::vector<double> theta_e;
  double loss = 0.0;
  bool converged = false;
  int restarts_used = 0;
  std::optional<Matrix> cov_full;  // 2k x 2k, [theta_q, theta_e] order
  std::optional<Matrix> cov_ee;    // k x k block for theta_e
};

/// M-estimation of the joint linear quantile/ES model by simplex search with
/// jittered restarts. Deterministic for fixed inputs and options.
JointFit fit_joint(const ReturnSeries& y, const Design& x,
                   ProbabilityLevel tau, const FitOptions& opts = {});

/// Pieces of the covariance estimator that need a density: a Gaussian-kernel
/// estimate of the standardized quantile-residual density at zero, scaled
/// back per row, plus the pooled truncated variance of the tail residuals.
struct SparsityEstimate {
  double bandwidth = 0.0;
  double density_at_zero = 0.0;            // standardized residual scale
  std::vector<double> density;             // per-row, at the fitted quantile
  std::vector<double> truncated_variance;  // per-row, nonnegative
  std::size_t n_violations = 0;
};

SparsityEstimate sparsity_estimate(const ReturnSeries& y, const Design& x,
                                   const JointFit& fit, ProbabilityLevel tau);

/// Asymptotic covariance of the stacked coefficient estimate. Fills cov_full
/// and cov_ee; both carry the 1/T scaling, so Wald statistics use them as-is.
JointFit estimate_covariance(JointFit fit, const ReturnSeries& y,
                             const Design& x, ProbabilityLevel tau);

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Nelder-Mead with standard coefficients (reflect 1, expand 2, contract 1/2,
/// shrink 1/2). step gives the initial per-coordinate simplex offsets.
SimplexResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> start, const std::vector<double>& step,
    double diameter_tol, int max_iter);

}  // namespace esb
