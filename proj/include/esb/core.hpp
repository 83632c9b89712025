#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace esb {

/// Left-tail probability level, in (0, 1). Risk desks typically use 0.025.
using ProbabilityLevel = double;

using ReturnSeries = std::vector<double>;

enum class ErrorCode {
  // input / configuration problems (CLI exit code 2)
  LengthMismatch,
  NonNegativeEsForecast,
  NonPositiveSigma,
  InvalidArgument,
  InvalidSpec,
  InsufficientPresample,
  CsvParseError,
  ConfigError,
  IoError,
  // statistical failures on an otherwise valid sample (CLI exit code 3)
  InfeasibleEs,
  NoFeasibleStart,
  SingularLambda,
  SingularOmega,
  NoViolations,
  ExcessiveExclusions,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

  /// True for errors that indicate bad inputs rather than a failed test.
  bool is_input_error() const {
    switch (code_) {
      case ErrorCode::LengthMismatch:
      case ErrorCode::NonNegativeEsForecast:
      case ErrorCode::NonPositiveSigma:
      case ErrorCode::InvalidArgument:
      case ErrorCode::InvalidSpec:
      case ErrorCode::InsufficientPresample:
      case ErrorCode::CsvParseError:
      case ErrorCode::ConfigError:
      case ErrorCode::IoError:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

enum class Hypothesis { TwoSided, OneSidedLess };

enum class TestMode { Asymptotic, Bootstrap };

const char* hypothesis_name(Hypothesis side);
const char* test_mode_name(TestMode mode);

/// Aligned per-day forecasts. ES is required and strictly negative; VaR and
/// volatility are optional because only some backtests consume them.
struct ForecastSet {
  std::vector<double> es;
  std::optional<std::vector<double>> var;
  std::optional<std::vector<double>> sigma;
};

struct TestReport {
  std::string test_name;
  double statistic = 0.0;
  double p_value = 0.0;
  Hypothesis side = Hypothesis::TwoSided;
  TestMode mode = TestMode::Asymptotic;
  std::optional<int> n_bootstrap;
  std::map<std::string, double> diagnostics;
};

struct ValidationResult {
  std::size_t n = 0;
  // Days where the VaR forecast lies below the ES forecast. Suspicious but
  // not fatal; callers surface these as warnings.
  std::size_t var_below_es = 0;
  std::vector<std::string> warnings;
};

/// Checks alignment and sign constraints of a (returns, forecasts) pair.
/// Throws Error on violations that make every backtest meaningless.
ValidationResult validate_pair(const ReturnSeries& returns,
                               const ForecastSet& forecasts);

/// Number of order statistics in the tau-tail of a sample of size n,
/// ceil(tau * n) clamped to [1, n]. Robust to floating noise in tau * n.
std::size_t tail_count(double tau, std::size_t n);

/// Type-1 (left-continuous inverse CDF) sample quantile: the ceil(tau*n)-th
/// order statistic, no interpolation.
double empirical_quantile(const std::vector<double>& xs, ProbabilityLevel tau);

/// Mean of all observations weakly below the type-1 tau-quantile.
double empirical_es(const std::vector<double>& xs, ProbabilityLevel tau);

}  // namespace esb
