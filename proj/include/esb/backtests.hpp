#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "esb/core.hpp"
#include "esb/jointreg.hpp"

namespace esb {

struct BootstrapOptions {
  int n_draws = 1000;
  std::uint64_t seed = 0;
};

/// Wald test of (intercept, slope) = (0, 1) in the joint regression of
/// returns on the ES forecast. Two-sided by construction: the Wald form has
/// no one-sided version.
TestReport esr_bivariate(const ReturnSeries& returns,
                         const ForecastSet& forecasts, ProbabilityLevel tau,
                         TestMode mode = TestMode::Asymptotic,
                         const BootstrapOptions& boot = {},
                         const FitOptions& fit_opts = {});

/// t-test of a zero intercept in the forecast-error ES. The point estimate
/// is the empirical ES of the errors; the standard error comes from the
/// intercept-only regression covariance. OneSidedLess rejects ES forecasts
/// sitting above the truth (risk understated).
TestReport esr_intercept(const ReturnSeries& returns,
                         const ForecastSet& forecasts, ProbabilityLevel tau,
                         Hypothesis side = Hypothesis::TwoSided,
                         TestMode mode = TestMode::Asymptotic,
                         const BootstrapOptions& boot = {});

struct ExceedanceResiduals {
  std::vector<double> values;  // one per VaR violation day
  double mean = 0.0;
  std::size_t n_violations = 0;
};

/// (Y_t - es_t) on days with Y_t <= var_t, optionally divided by sigma_t.
ExceedanceResiduals exceedance_residuals(const ReturnSeries& returns,
                                         const ForecastSet& forecasts,
                                         bool standardized);

/// Translation bootstrap t-test of mean-zero exceedance residuals. The
/// reported probability level never enters the statistic. Needs var
/// forecasts, and sigma when standardized.
TestReport er_test(const ReturnSeries& returns, const ForecastSet& forecasts,
                   ProbabilityLevel tau,
                   Hypothesis side = Hypothesis::OneSidedLess,
                   bool standardized = false,
                   const BootstrapOptions& boot = {});

/// Two-component moment function whose conditional mean vanishes exactly at
/// the true (VaR, ES) pair.
std::array<double, 2> cc_identification(double y, double v, double e,
                                        double tau);

enum class CcVariant { Simple, General };

/// Conditional-calibration backtests. Two-sided variants are Wald tests on
/// instrumented moment averages; one-sided variants run component-wise
/// z-tests with a Bonferroni-combined p-value. Needs var forecasts; the
/// General variant also needs sigma.
TestReport cc_test(const ReturnSeries& returns, const ForecastSet& forecasts,
                   ProbabilityLevel tau, CcVariant variant = CcVariant::Simple,
                   Hypothesis side = Hypothesis::TwoSided);

struct RankedForecaster {
  std::string label;
  double mean_loss = 0.0;
};

/// Orders forecast sets by mean joint loss evaluated at their own (VaR, ES)
/// forecasts, best first. Ties keep label order.
std::vector<RankedForecaster> rank_by_fz0_loss(
    const ReturnSeries& returns,
    const std::vector<std::pair<std::string, ForecastSet>>& candidates,
    ProbabilityLevel tau);

}  // namespace esb
