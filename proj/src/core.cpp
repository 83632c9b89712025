#include "esb/core.hpp"

#include <algorithm>
#include <cmath>

namespace esb {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonNegativeEsForecast: return "NonNegativeEsForecast";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InsufficientPresample: return "InsufficientPresample";
    case ErrorCode::CsvParseError: return "CsvParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InfeasibleEs: return "InfeasibleEs";
    case ErrorCode::NoFeasibleStart: return "NoFeasibleStart";
    case ErrorCode::SingularLambda: return "SingularLambda";
    case ErrorCode::SingularOmega: return "SingularOmega";
    case ErrorCode::NoViolations: return "NoViolations";
    case ErrorCode::ExcessiveExclusions: return "ExcessiveExclusions";
  }
  return "UnknownError";
}

const char* hypothesis_name(Hypothesis side) {
  return side == Hypothesis::TwoSided ? "two_sided" : "one_sided_less";
}

const char* test_mode_name(TestMode mode) {
  return mode == TestMode::Asymptotic ? "asymptotic" : "bootstrap";
}

ValidationResult validate_pair(const ReturnSeries& returns,
                               const ForecastSet& forecasts) {
  const std::size_t n = returns.size();
  if (n == 0) {
    throw Error(ErrorCode::InvalidArgument, "empty return series");
  }
  if (forecasts.es.size() != n) {
    throw Error(ErrorCode::LengthMismatch,
                "es forecasts (" + std::to_string(forecasts.es.size()) +
                    ") misaligned with returns (" + std::to_string(n) + ")");
  }
  if (forecasts.var && forecasts.var->size() != n) {
    throw Error(ErrorCode::LengthMismatch,
                "var forecasts (" + std::to_string(forecasts.var->size()) +
                    ") misaligned with returns (" + std::to_string(n) + ")");
  }
  if (forecasts.sigma && forecasts.sigma->size() != n) {
    throw Error(ErrorCode::LengthMismatch,
                "sigma forecasts (" + std::to_string(forecasts.sigma->size()) +
                    ") misaligned with returns (" + std::to_string(n) + ")");
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (!std::isfinite(returns[t])) {
      throw Error(ErrorCode::InvalidArgument,
                  "non-finite return at row " + std::to_string(t));
    }
    if (!std::isfinite(forecasts.es[t]) || forecasts.es[t] >= 0.0) {
      throw Error(ErrorCode::NonNegativeEsForecast,
                  "es forecast must be strictly negative, got " +
                      std::to_string(forecasts.es[t]) + " at row " +
                      std::to_string(t));
    }
    if (forecasts.var && !std::isfinite((*forecasts.var)[t])) {
      throw Error(ErrorCode::InvalidArgument,
                  "non-finite var forecast at row " + std::to_string(t));
    }
    if (forecasts.sigma &&
        (!std::isfinite((*forecasts.sigma)[t]) || (*forecasts.sigma)[t] <= 0.0)) {
      throw Error(ErrorCode::NonPositiveSigma,
                  "sigma forecast must be strictly positive, got " +
                      std::to_string((*forecasts.sigma)[t]) + " at row " +
                      std::to_string(t));
    }
  }
  ValidationResult result;
  result.n = n;
  if (forecasts.var) {
    for (std::size_t t = 0; t < n; ++t) {
      if ((*forecasts.var)[t] < forecasts.es[t]) ++result.var_below_es;
    }
    if (result.var_below_es > 0) {
      result.warnings.push_back(
          "var forecast below es forecast on " +
          std::to_string(result.var_below_es) + " of " + std::to_string(n) +
          " days");
    }
  }
  return result;
}

std::size_t tail_count(double tau, std::size_t n) {
  // tau * n can land a hair above an integer in floating point; treating
  // near-integers as exact keeps the type-1 quantile at the intended order
  // statistic.
  const double m = std::ceil(tau * static_cast<double>(n) - 1e-9);
  if (m < 1.0) return 1;
  if (m > static_cast<double>(n)) return n;
  return static_cast<std::size_t>(m);
}

double empirical_quantile(const std::vector<double>& xs, ProbabilityLevel tau) {
  if (xs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empirical_quantile: empty sample");
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "empirical_quantile: tau must lie in (0, 1)");
  }
  const std::size_t m = tail_count(tau, xs.size());
  std::vector<double> work(xs);
  std::nth_element(work.begin(), work.begin() + (m - 1), work.end());
  return work[m - 1];
}

double empirical_es(const std::vector<double>& xs, ProbabilityLevel tau) {
  const double q = empirical_quantile(xs, tau);
  double sum = 0.0;
  std::size_t count = 0;
  for (double x : xs) {
    if (x <= q) {
      sum += x;
      ++count;
    }
  }
  // count >= 1 because q itself is an element of xs.
  return sum / static_cast<double>(count);
}

}  // namespace esb
