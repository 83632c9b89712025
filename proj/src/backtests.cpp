#include "esb/backtests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "esb/distributions.hpp"
#include "esb/linalg.hpp"
#include "esb/rng.hpp"

namespace esb {

namespace {

double two_sided_normal_p(double t) {
  return std::erfc(std::fabs(t) / 1.4142135623730950488);
}

double lower_normal_p(double t) { return normal_cdf(t); }

struct InterceptEstimate {
  double q = 0.0;      // type-1 empirical quantile of the forecast errors
  double alpha = 0.0;  // empirical ES of the forecast errors
  double se = 0.0;
};

// Point estimate plus standard error for the error-intercept model. The
// standard error reuses the regression covariance with an intercept-only
// design evaluated at the empirical (quantile, ES) pair.
InterceptEstimate intercept_estimate(const std::vector<double>& errors,
                                     double tau) {
  InterceptEstimate est;
  est.q = empirical_quantile(errors, tau);
  est.alpha = empirical_es(errors, tau);
  if (est.alpha == 0.0) {
    // exactly centered errors leave the es-scaled covariance weights
    // undefined; the t statistic is zero whatever the standard error
    est.se = std::numeric_limits<double>::infinity();
    return est;
  }
  JointFit fit;
  fit.theta_q = {est.q};
  fit.theta_e = {est.alpha};
  const Design design = Design::intercept_only(errors.size());
  fit = estimate_covariance(std::move(fit), errors, design, tau);
  const double var = fit.cov_ee->at(0, 0);
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw Error(ErrorCode::SingularLambda,
                "degenerate variance for the error-intercept estimate");
  }
  est.se = std::sqrt(var);
  return est;
}

std::vector<std::size_t> resample_indices(std::size_t n,
                                          std::mt19937_64* engine) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(*engine);
  return idx;
}

}  // namespace

TestReport esr_bivariate(const ReturnSeries& returns,
                         const ForecastSet& forecasts, ProbabilityLevel tau,
                         TestMode mode, const BootstrapOptions& boot,
                         const FitOptions& fit_opts) {
  validate_pair(returns, forecasts);
  const std::size_t n = returns.size();
  const Design design = Design::intercept_and(forecasts.es);
  JointFit fit = fit_joint(returns, design, tau, fit_opts);
  fit = estimate_covariance(std::move(fit), returns, design, tau);

  Matrix sigma_es = *fit.cov_ee;
  if (!invert(sigma_es)) {
    throw Error(ErrorCode::SingularLambda,
                "es coefficient covariance is singular");
  }
  const std::vector<double> dev = {fit.theta_e[0], fit.theta_e[1] - 1.0};
  const double wald = quad_form(dev, sigma_es);

  TestReport report;
  report.test_name = "esr_bivariate";
  report.side = Hypothesis::TwoSided;
  report.mode = mode;
  report.statistic = wald;
  report.diagnostics["gamma_hat"] = fit.theta_q[0];
  report.diagnostics["delta_hat"] = fit.theta_q[1];
  report.diagnostics["alpha_hat"] = fit.theta_e[0];
  report.diagnostics["beta_hat"] = fit.theta_e[1];
  report.diagnostics["loss"] = fit.loss;
  report.diagnostics["converged"] = fit.converged ? 1.0 : 0.0;

  if (mode == TestMode::Asymptotic) {
    report.p_value = chi2_survival(2.0, wald);
    return report;
  }

  // percentile-t: each draw refits the full system on a pair resample and
  // studentizes with its own covariance, centered at the original estimate
  std::vector<double> warm(4);
  warm[0] = fit.theta_q[0];
  warm[1] = fit.theta_q[1];
  warm[2] = fit.theta_e[0];
  warm[3] = fit.theta_e[1];
  FitOptions boot_opts;
  boot_opts.restarts = 2;
  boot_opts.simplex_tol = fit_opts.simplex_tol;
  boot_opts.max_iter = fit_opts.max_iter;
  boot_opts.start = warm;

  int exceed = 0;
  int failed = 0;
  ReturnSeries y_star(n);
  std::vector<double> es_star(n);
  for (int b = 0; b < boot.n_draws; ++b) {
    std::mt19937_64 engine(derive_seed(boot.seed, static_cast<std::uint64_t>(b)));
    const auto idx = resample_indices(n, &engine);
    for (std::size_t t = 0; t < n; ++t) {
      y_star[t] = returns[idx[t]];
      es_star[t] = forecasts.es[idx[t]];
    }
    try {
      const Design design_star = Design::intercept_and(es_star);
      JointFit refit = fit_joint(y_star, design_star, tau, boot_opts);
      refit = estimate_covariance(std::move(refit), y_star, design_star, tau);
      Matrix sigma_star = *refit.cov_ee;
      if (!invert(sigma_star)) {
        ++failed;
        continue;
      }
      const std::vector<double> dev_star = {
          refit.theta_e[0] - fit.theta_e[0],
          refit.theta_e[1] - fit.theta_e[1]};
      const double wald_star = quad_form(dev_star, sigma_star);
      if (!std::isfinite(wald_star)) {
        ++failed;
        continue;
      }
      if (wald_star >= wald) ++exceed;
    } catch (const Error&) {
      ++failed;
    }
  }
  const int effective = boot.n_draws - failed;
  if (effective <= 0) {
    throw Error(ErrorCode::SingularLambda, "all bootstrap refits failed");
  }
  report.p_value = static_cast<double>(exceed) / effective;
  report.n_bootstrap = boot.n_draws;
  if (failed > 0) report.diagnostics["bootstrap_failed"] = failed;
  return report;
}

TestReport esr_intercept(const ReturnSeries& returns,
                         const ForecastSet& forecasts, ProbabilityLevel tau,
                         Hypothesis side, TestMode mode,
                         const BootstrapOptions& boot) {
  validate_pair(returns, forecasts);
  const std::size_t n = returns.size();
  std::vector<double> errors(n);
  for (std::size_t t = 0; t < n; ++t) errors[t] = returns[t] - forecasts.es[t];

  const InterceptEstimate est = intercept_estimate(errors, tau);
  const double t_obs = est.alpha / est.se;

  TestReport report;
  report.test_name = "esr_intercept";
  report.side = side;
  report.mode = mode;
  report.statistic = t_obs;
  report.diagnostics["alpha_hat"] = est.alpha;
  report.diagnostics["se"] = est.se;

  if (mode == TestMode::Asymptotic) {
    report.p_value = side == Hypothesis::TwoSided ? two_sided_normal_p(t_obs)
                                                  : lower_normal_p(t_obs);
    return report;
  }

  int extreme = 0;
  int failed = 0;
  std::vector<double> errors_star(n);
  for (int b = 0; b < boot.n_draws; ++b) {
    std::mt19937_64 engine(derive_seed(boot.seed, static_cast<std::uint64_t>(b)));
    const auto idx = resample_indices(n, &engine);
    for (std::size_t t = 0; t < n; ++t) errors_star[t] = errors[idx[t]];
    try {
      const InterceptEstimate star = intercept_estimate(errors_star, tau);
      const double t_star = (star.alpha - est.alpha) / star.se;
      if (!std::isfinite(t_star)) {
        ++failed;
        continue;
      }
      if (side == Hypothesis::TwoSided) {
        if (std::fabs(t_star) >= std::fabs(t_obs)) ++extreme;
      } else {
        if (t_star <= t_obs) ++extreme;
      }
    } catch (const Error&) {
      ++failed;
    }
  }
  const int effective = boot.n_draws - failed;
  if (effective <= 0) {
    throw Error(ErrorCode::SingularLambda, "all bootstrap draws failed");
  }
  report.p_value = static_cast<double>(extreme) / effective;
  report.n_bootstrap = boot.n_draws;
  if (failed > 0) report.diagnostics["bootstrap_failed"] = failed;
  return report;
}

ExceedanceResiduals exceedance_residuals(const ReturnSeries& returns,
                                         const ForecastSet& forecasts,
                                         bool standardized) {
  validate_pair(returns, forecasts);
  if (!forecasts.var) {
    throw Error(ErrorCode::InvalidArgument,
                "exceedance residuals need var forecasts");
  }
  if (standardized && !forecasts.sigma) {
    throw Error(ErrorCode::InvalidArgument,
                "standardized exceedance residuals need sigma forecasts");
  }
  ExceedanceResiduals out;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (returns[t] <= (*forecasts.var)[t]) {
      double r = returns[t] - forecasts.es[t];
      if (standardized) r /= (*forecasts.sigma)[t];
      out.values.push_back(r);
    }
  }
  out.n_violations = out.values.size();
  if (!out.values.empty()) {
    out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) /
               static_cast<double>(out.values.size());
  }
  return out;
}

TestReport er_test(const ReturnSeries& returns, const ForecastSet& forecasts,
                   ProbabilityLevel tau, Hypothesis side, bool standardized,
                   const BootstrapOptions& boot) {
  (void)tau;  // the statistic is invariant to the reported level
  const ExceedanceResiduals er =
      exceedance_residuals(returns, forecasts, standardized);
  const std::size_t n = er.n_violations;
  if (n < 2) {
    throw Error(ErrorCode::NoViolations,
                "need at least 2 var violations for the studentized "
                "bootstrap, got " +
                    std::to_string(n));
  }
  double ss = 0.0;
  for (double v : er.values) ss += (v - er.mean) * (v - er.mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) {
    throw Error(ErrorCode::NoViolations,
                "exceedance residuals are constant; t-test undefined");
  }
  const double t_obs = er.mean / (sd / std::sqrt(static_cast<double>(n)));

  // translate to the null, resample, studentize each draw
  std::vector<double> centered(er.values);
  for (double& v : centered) v -= er.mean;

  int extreme = 0;
  std::vector<double> draw(n);
  for (int b = 0; b < boot.n_draws; ++b) {
    std::mt19937_64 engine(derive_seed(boot.seed, static_cast<std::uint64_t>(b)));
    const auto idx = resample_indices(n, &engine);
    for (std::size_t i = 0; i < n; ++i) draw[i] = centered[idx[i]];
    const double mean_star =
        std::accumulate(draw.begin(), draw.end(), 0.0) / static_cast<double>(n);
    double ss_star = 0.0;
    for (double v : draw) ss_star += (v - mean_star) * (v - mean_star);
    const double sd_star = std::sqrt(ss_star / static_cast<double>(n - 1));
    double t_star;
    if (sd_star > 0.0) {
      t_star = mean_star / (sd_star / std::sqrt(static_cast<double>(n)));
    } else {
      t_star = mean_star == 0.0
                   ? 0.0
                   : std::copysign(std::numeric_limits<double>::infinity(),
                                   mean_star);
    }
    if (side == Hypothesis::TwoSided) {
      if (std::fabs(t_star) >= std::fabs(t_obs)) ++extreme;
    } else {
      if (t_star <= t_obs) ++extreme;
    }
  }

  TestReport report;
  report.test_name = standardized ? "er_std" : "er";
  report.side = side;
  report.mode = TestMode::Bootstrap;
  report.statistic = t_obs;
  report.p_value = static_cast<double>(extreme) / boot.n_draws;
  report.n_bootstrap = boot.n_draws;
  report.diagnostics["mean_residual"] = er.mean;
  report.diagnostics["n_violations"] = static_cast<double>(n);
  return report;
}

std::array<double, 2> cc_identification(double y, double v, double e,
                                        double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "cc_identification: tau must lie in (0, 1)");
  }
  const double hit = (y <= v) ? 1.0 : 0.0;
  return {tau - hit, e - v + hit * (v - y) / tau};
}

TestReport cc_test(const ReturnSeries& returns, const ForecastSet& forecasts,
                   ProbabilityLevel tau, CcVariant variant, Hypothesis side) {
  validate_pair(returns, forecasts);
  if (!forecasts.var) {
    throw Error(ErrorCode::InvalidArgument, "cc test needs var forecasts");
  }
  if (variant == CcVariant::General && !forecasts.sigma) {
    throw Error(ErrorCode::InvalidArgument,
                "general cc test needs sigma forecasts");
  }
  const std::size_t n = returns.size();
  const auto& var = *forecasts.var;

  std::size_t q = 0;
  if (variant == CcVariant::Simple) {
    q = 2;
  } else {
    q = side == Hypothesis::TwoSided ? 1 : 4;
  }

  std::vector<double> moment(q);
  std::vector<double> mbar(q, 0.0);
  Matrix omega(q);
  std::size_t n_hits = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto ident =
        cc_identification(returns[t], var[t], forecasts.es[t], tau);
    if (returns[t] <= var[t]) ++n_hits;
    if (variant == CcVariant::Simple) {
      moment[0] = ident[0];
      moment[1] = ident[1];
    } else if (side == Hypothesis::TwoSided) {
      const double s = (*forecasts.sigma)[t];
      moment[0] =
          s * ((forecasts.es[t] - var[t]) / tau * ident[0] + ident[1]);
    } else {
      const double s = (*forecasts.sigma)[t];
      moment[0] = ident[0];
      moment[1] = std::fabs(var[t]) * ident[0];
      moment[2] = ident[1];
      moment[3] = ident[1] / s;
    }
    for (std::size_t i = 0; i < q; ++i) {
      mbar[i] += moment[i];
      for (std::size_t j = 0; j < q; ++j) {
        omega.at(i, j) += moment[i] * moment[j];
      }
    }
  }
  for (double& v : mbar) v /= static_cast<double>(n);
  for (double& v : omega.a) v /= static_cast<double>(n);

  TestReport report;
  report.test_name = variant == CcVariant::Simple ? "cc_simple" : "cc_general";
  report.side = side;
  report.mode = TestMode::Asymptotic;
  report.diagnostics["n_violations"] = static_cast<double>(n_hits);
  report.diagnostics["q"] = static_cast<double>(q);

  if (side == Hypothesis::TwoSided) {
    if (!invert(omega)) {
      throw Error(ErrorCode::SingularOmega,
                  "moment outer-product matrix is singular");
    }
    const double t_cc = static_cast<double>(n) * quad_form(mbar, omega);
    report.statistic = t_cc;
    report.p_value = chi2_survival(static_cast<double>(q), t_cc);
    return report;
  }

  // component-wise lower z-tests, Bonferroni combination
  double min_z = std::numeric_limits<double>::infinity();
  double min_p = 1.0;
  for (std::size_t j = 0; j < q; ++j) {
    const double v = omega.at(j, j);
    if (!(v > 0.0)) {
      throw Error(ErrorCode::SingularOmega,
                  "moment component " + std::to_string(j) +
                      " has zero second moment");
    }
    const double z = std::sqrt(static_cast<double>(n)) * mbar[j] / std::sqrt(v);
    min_z = std::min(min_z, z);
    min_p = std::min(min_p, lower_normal_p(z));
    report.diagnostics["z" + std::to_string(j)] = z;
  }
  report.statistic = min_z;
  report.p_value = std::min(1.0, static_cast<double>(q) * min_p);
  return report;
}

std::vector<RankedForecaster> rank_by_fz0_loss(
    const ReturnSeries& returns,
    const std::vector<std::pair<std::string, ForecastSet>>& candidates,
    ProbabilityLevel tau) {
  std::vector<RankedForecaster> ranked;
  ranked.reserve(candidates.size());
  for (const auto& [label, forecasts] : candidates) {
    validate_pair(returns, forecasts);
    if (!forecasts.var) {
      throw Error(ErrorCode::InvalidArgument,
                  "loss ranking needs var forecasts for " + label);
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < returns.size(); ++t) {
      sum += fz0_loss(returns[t], (*forecasts.var)[t], forecasts.es[t], tau);
    }
    ranked.push_back({label, sum / static_cast<double>(returns.size())});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedForecaster& a, const RankedForecaster& b) {
                     return a.mean_loss < b.mean_loss;
                   });
  return ranked;
}

}  // namespace esb
