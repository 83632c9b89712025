#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "esb/core.hpp"
#include "esb/distributions.hpp"

namespace esb {

/// sigma2_t = omega + alpha * y_{t-1}^2 + beta * sigma2_{t-1}
struct GarchSpec {
  double omega = 0.01;
  double alpha = 0.10;
  double beta = 0.85;
  InnovationLaw law = StandardizedT{5.0};
};

/// log sigma2_t = omega + alpha * z_{t-1}
///              + theta * (|z_{t-1}| - E|z|) + beta * log sigma2_{t-1}
struct EgarchSpec {
  double omega = -0.160;
  double alpha = -0.125;
  double theta = 0.130;
  double beta = 0.983;
  InnovationLaw law = StandardizedT{7.24};
};

using DgpSpec = std::variant<GarchSpec, EgarchSpec>;

void validate_spec(const GarchSpec& spec);
void validate_spec(const EgarchSpec& spec);
double unconditional_variance(const GarchSpec& spec);
const InnovationLaw& innovation_law(const DgpSpec& dgp);

/// One simulated sample path; returns[t] == sigma[t] * z[t] holds exactly.
struct SimPath {
  std::vector<double> returns;
  std::vector<double> sigma;
  std::vector<double> z;
};

/// Draws burnin + t days starting from the unconditional variance and keeps
/// the final t. Deterministic in (spec, t, burnin, seed).
SimPath simulate_garch(const GarchSpec& spec, std::size_t t,
                       std::size_t burnin, std::uint64_t seed);
SimPath simulate_egarch(const EgarchSpec& spec, std::size_t t,
                        std::size_t burnin, std::uint64_t seed);
SimPath simulate(const DgpSpec& dgp, std::size_t t, std::size_t burnin,
                 std::uint64_t seed);

/// Forecasts from the true conditional volatility: var = sigma_t * q(tau),
/// es = sigma_t * es(tau), sigma as simulated.
ForecastSet oracle_forecasts(const SimPath& path, const InnovationLaw& law,
                             ProbabilityLevel tau);

/// Conditional standard deviations from running the recursion of `spec`
/// over observed returns, started at its unconditional variance.
/// sigma[t] uses information through returns[t-1].
std::vector<double> garch_filter(const GarchSpec& spec,
                                 const std::vector<double>& returns);

/// Location-scale forecasts implied by filtering `returns` with `spec`.
ForecastSet filtered_forecasts(const GarchSpec& spec,
                               const std::vector<double>& returns,
                               ProbabilityLevel tau);

/// How the rolling-window ES forecast treats the violation indicator:
/// each past day against its own stored VaR forecast, or every window
/// observation against the current window quantile.
enum class HsEsMode { PastForecasts, CurrentQuantile };

struct HsForecasts {
  std::size_t first = 0;   // index into the input series of the first row
  ForecastSet forecasts;   // rows aligned to series indices [first, n)
  std::vector<std::uint8_t> valid;  // same alignment
  std::size_t n_no_coverage = 0;    // past VaR forecasts missing
  std::size_t n_empty_violation = 0;
  std::size_t n_degenerate = 0;     // es >= 0 or zero window spread
};

/// Rolling-window empirical forecasts with window length w. Emits one row
/// per day from the first day with a full window; days whose ES cannot be
/// formed are flagged instead of silently filled.
HsForecasts historical_simulation(const std::vector<double>& returns,
                                  std::size_t w, ProbabilityLevel tau,
                                  HsEsMode mode = HsEsMode::PastForecasts);

/// Number of leading series days a forecaster needs before the first fully
/// covered forecast: w for the oracle-style filters and CurrentQuantile,
/// 2w for PastForecasts.
std::size_t hs_required_presample(std::size_t w, HsEsMode mode);

/// Single-axis deviations from a base volatility model.
///   a: innovation share, persistence held fixed
///   b: unconditional variance
///   c: persistence, unconditional variance held fixed
///   d: innovation tail index (degrees of freedom; +inf means normal)
///   e: probability level used by the forecaster
enum class MisspecKind { A, B, C, D, E };

struct MisspecDesign {
  MisspecKind kind = MisspecKind::A;
  double value = 0.0;
};

struct MisspecModel {
  GarchSpec spec;
  ProbabilityLevel effective_tau = 0.0;  // level the forecaster targets
};

MisspecKind misspec_kind_from_char(char c);
char misspec_kind_char(MisspecKind kind);

/// Closed sweep range for each design axis.
std::pair<double, double> misspec_range(MisspecKind kind);

/// Grid value at which the design reproduces the base model exactly.
double misspec_true_value(MisspecKind kind, const GarchSpec& base,
                          ProbabilityLevel tau);

MisspecModel apply_misspec(const GarchSpec& base, const MisspecDesign& design,
                           ProbabilityLevel tau);

/// 21 evenly spaced points over the design's range (design d is spaced
/// evenly in 1/nu), with the true-model value inserted when absent.
std::vector<double> misspec_default_grid(MisspecKind kind,
                                         const GarchSpec& base,
                                         ProbabilityLevel tau);

}  // namespace esb
