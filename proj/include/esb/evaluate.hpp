#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esb/backtests.hpp"
#include "esb/core.hpp"
#include "esb/simulate.hpp"

namespace esb {

enum class BacktestId {
  EsrBivariateAsymptotic,
  EsrBivariateBootstrap,
  EsrInterceptAsymptotic,
  EsrInterceptBootstrap,
  Er,
  ErStandardized,
  CcSimple,
  CcGeneral,
};

const char* backtest_id_name(BacktestId id);
BacktestId backtest_id_from_name(const std::string& name);
std::vector<BacktestId> all_backtest_ids();

struct McConfig {
  std::size_t n_reps = 10000;
  std::vector<std::size_t> sample_sizes{250, 500, 1000, 2500, 5000};
  std::vector<double> nominal_sizes{0.01, 0.05, 0.10};
  ProbabilityLevel tau = 0.025;
  std::uint64_t master_seed = 1;
  int bootstrap_b = 1000;
  std::size_t burnin = 1000;
  std::size_t hs_window = 250;
  // Days kept ahead of the evaluation window for warm-up of rolling-window
  // and filtered forecasters. Default: what the configured forecaster needs.
  std::optional<std::size_t> presample;
  HsEsMode hs_mode = HsEsMode::PastForecasts;
  // A study aborts once any test loses more than this fraction of
  // replications to statistical failures.
  double max_exclusion_fraction = 0.01;
  unsigned threads = 0;    // 0 = hardware concurrency
  bool verbose = false;    // replication progress on standard error
};

void validate_config(const McConfig& cfg);

struct TestOutcome {
  double p_value = 1.0;
  // Rejection statistic oriented so that larger means stronger evidence
  // against the null, whatever the test's native sign convention. Size
  // adjustment and ROC curves compare these across replications.
  double reject_stat = 0.0;
};

/// Runs one backtest and maps its report onto the common orientation.
/// The seed feeds bootstrap resampling only; asymptotic tests ignore it.
TestOutcome evaluate_test(BacktestId id, const ReturnSeries& returns,
                          const ForecastSet& forecasts, ProbabilityLevel tau,
                          Hypothesis side, std::uint64_t seed,
                          int bootstrap_b);

/// Critical value = type-1 (1-nominal)-quantile of the null statistics;
/// power = fraction of alternative statistics strictly above it. Feeding the
/// null sample as its own alternative returns the nominal size exactly
/// whenever (1-nominal)*n is an integer.
double size_adjusted_power(const std::vector<double>& null_stats,
                           const std::vector<double>& alt_stats,
                           double nominal);

struct PowerCurve {
  // (empirical size, size-adjusted power), sizes ascending from 0 to 1.
  std::vector<std::pair<double, double>> points;
};

/// Sweeps the critical value over the distinct null order statistics.
PowerCurve roc_curve(const std::vector<double>& null_stats,
                     const std::vector<double>& alt_stats);

/// Trapezoidal integral of power over size in [lo, hi], the curve treated
/// as a polyline. Un-normalized: the ceiling is hi - lo.
double pauc(const PowerCurve& curve, double lo = 0.01, double hi = 0.10);

struct SizeRow {
  BacktestId test;
  std::size_t sample_size = 0;
  double nominal = 0.0;
  double rate = 0.0;
};

struct ExclusionRow {
  BacktestId test;
  std::size_t sample_size = 0;
  std::string arm;  // "null", "alt", or the grid value
  std::size_t excluded = 0;
  std::size_t total = 0;
};

struct SizeStudy {
  std::vector<SizeRow> rows;
  std::vector<ExclusionRow> exclusions;
};

/// Empirical rejection rates of correctly specified forecasts: simulates the
/// DGP, forecasts with the true conditional volatility and innovation law,
/// and counts p <= nominal.
SizeStudy run_size_study(const DgpSpec& dgp,
                         const std::vector<BacktestId>& tests,
                         Hypothesis side, const McConfig& cfg);

struct PowerRow {
  BacktestId test;
  std::size_t sample_size = 0;
  double nominal = 0.0;
  double raw_power = 0.0;       // p <= nominal under the alternative
  double adjusted_power = 0.0;  // calibrated critical values
};

struct PaucRow {
  BacktestId test;
  std::size_t sample_size = 0;
  double value = 0.0;
};

struct RocPointRow {
  BacktestId test;
  std::size_t sample_size = 0;
  double size = 0.0;
  double power = 0.0;
};

struct PowerStudy {
  std::vector<PowerRow> rows;
  std::vector<PaucRow> paucs;
  std::vector<RocPointRow> roc_points;
  std::vector<SizeRow> null_rates;  // by-product: sizes from the null arm
  std::vector<ExclusionRow> exclusions;
  std::size_t dropped_forecast_days = 0;  // invalid rolling-window days
};

/// Null arm: oracle forecasts. Alternative arm: rolling-window historical
/// simulation with cfg.hs_window. Both arms of a replication share one
/// simulated path, so adjusted power compares like with like.
PowerStudy run_power_study(const DgpSpec& dgp,
                           const std::vector<BacktestId>& tests,
                           Hypothesis side, const McConfig& cfg);

struct SweepRow {
  BacktestId test;
  std::size_t sample_size = 0;
  double grid_value = 0.0;
  double nominal = 0.0;
  double raw_rate = 0.0;
  double adjusted_rate = 0.0;
};

struct SweepStudy {
  std::vector<double> grid;
  std::vector<SweepRow> rows;
  std::vector<ExclusionRow> exclusions;
};

/// Rejection-rate curves along one misspecification axis. Data come from the
/// base model; each grid value's forecasts come from filtering the simulated
/// returns with the deformed model. The null arm filters with the base model
/// itself, so the true-model grid point is an exact self-comparison.
/// An empty grid means the default 21-point grid for the axis.
SweepStudy run_misspec_sweep(const GarchSpec& base, MisspecKind kind,
                             std::vector<double> grid,
                             const std::vector<BacktestId>& tests,
                             Hypothesis side, const McConfig& cfg);

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Exceptions cancel outstanding work and rethrow.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace esb
