#include "esb/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace esb {

namespace {

double window_sd(const double* begin, std::size_t w) {
  double mean = 0.0;
  for (std::size_t i = 0; i < w; ++i) mean += begin[i];
  mean /= static_cast<double>(w);
  double ss = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    ss += (begin[i] - mean) * (begin[i] - mean);
  }
  return w > 1 ? std::sqrt(ss / static_cast<double>(w - 1)) : 0.0;
}

}  // namespace

void validate_spec(const GarchSpec& spec) {
  validate_law(spec.law);
  if (!(spec.omega > 0.0) || spec.alpha < 0.0 || spec.beta < 0.0 ||
      !(spec.alpha + spec.beta < 1.0)) {
    throw Error(ErrorCode::InvalidSpec,
                "garch parameters need omega > 0, alpha, beta >= 0, "
                "alpha + beta < 1");
  }
}

void validate_spec(const EgarchSpec& spec) {
  validate_law(spec.law);
  if (!(std::fabs(spec.beta) < 1.0)) {
    throw Error(ErrorCode::InvalidSpec,
                "egarch persistence needs |beta| < 1");
  }
}

double unconditional_variance(const GarchSpec& spec) {
  return spec.omega / (1.0 - spec.alpha - spec.beta);
}

const InnovationLaw& innovation_law(const DgpSpec& dgp) {
  if (const auto* g = std::get_if<GarchSpec>(&dgp)) return g->law;
  return std::get<EgarchSpec>(dgp).law;
}

SimPath simulate_garch(const GarchSpec& spec, std::size_t t,
                       std::size_t burnin, std::uint64_t seed) {
  validate_spec(spec);
  if (t == 0) {
    throw Error(ErrorCode::InvalidArgument, "need at least one simulated day");
  }
  SimPath path;
  path.returns.reserve(t);
  path.sigma.reserve(t);
  path.z.reserve(t);
  LawSampler sampler(spec.law, seed);
  double sigma2 = unconditional_variance(spec);
  for (std::size_t i = 0; i < burnin + t; ++i) {
    const double sigma = std::sqrt(sigma2);
    const double z = sampler.next();
    const double y = sigma * z;
    if (i >= burnin) {
      path.returns.push_back(y);
      path.sigma.push_back(sigma);
      path.z.push_back(z);
    }
    sigma2 = spec.omega + spec.alpha * y * y + spec.beta * sigma2;
  }
  return path;
}

SimPath simulate_egarch(const EgarchSpec& spec, std::size_t t,
                        std::size_t burnin, std::uint64_t seed) {
  validate_spec(spec);
  if (t == 0) {
    throw Error(ErrorCode::InvalidArgument, "need at least one simulated day");
  }
  SimPath path;
  path.returns.reserve(t);
  path.sigma.reserve(t);
  path.z.reserve(t);
  LawSampler sampler(spec.law, seed);
  const double mean_abs = abs_moment(spec.law);
  double log_sigma2 = spec.omega / (1.0 - spec.beta);
  for (std::size_t i = 0; i < burnin + t; ++i) {
    const double sigma = std::exp(0.5 * log_sigma2);
    const double z = sampler.next();
    if (i >= burnin) {
      path.returns.push_back(sigma * z);
      path.sigma.push_back(sigma);
      path.z.push_back(z);
    }
    log_sigma2 = spec.omega + spec.alpha * z +
                 spec.theta * (std::fabs(z) - mean_abs) +
                 spec.beta * log_sigma2;
  }
  return path;
}

SimPath simulate(const DgpSpec& dgp, std::size_t t, std::size_t burnin,
                 std::uint64_t seed) {
  if (const auto* g = std::get_if<GarchSpec>(&dgp)) {
    return simulate_garch(*g, t, burnin, seed);
  }
  return simulate_egarch(std::get<EgarchSpec>(dgp), t, burnin, seed);
}

ForecastSet oracle_forecasts(const SimPath& path, const InnovationLaw& law,
                             ProbabilityLevel tau) {
  const double qz = quantile(law, tau);
  const double ez = es(law, tau);
  const std::size_t n = path.returns.size();
  ForecastSet fc;
  fc.es.resize(n);
  fc.var.emplace(n);
  fc.sigma.emplace(n);
  for (std::size_t t = 0; t < n; ++t) {
    (*fc.var)[t] = path.sigma[t] * qz;
    fc.es[t] = path.sigma[t] * ez;
    (*fc.sigma)[t] = path.sigma[t];
  }
  return fc;
}

std::vector<double> garch_filter(const GarchSpec& spec,
                                 const std::vector<double>& returns) {
  validate_spec(spec);
  std::vector<double> sigma(returns.size());
  double sigma2 = unconditional_variance(spec);
  for (std::size_t t = 0; t < returns.size(); ++t) {
    sigma[t] = std::sqrt(sigma2);
    sigma2 = spec.omega + spec.alpha * returns[t] * returns[t] +
             spec.beta * sigma2;
  }
  return sigma;
}

ForecastSet filtered_forecasts(const GarchSpec& spec,
                               const std::vector<double>& returns,
                               ProbabilityLevel tau) {
  const std::vector<double> sigma = garch_filter(spec, returns);
  const double qz = quantile(spec.law, tau);
  const double ez = es(spec.law, tau);
  const std::size_t n = returns.size();
  ForecastSet fc;
  fc.es.resize(n);
  fc.var.emplace(n);
  fc.sigma = sigma;
  for (std::size_t t = 0; t < n; ++t) {
    (*fc.var)[t] = sigma[t] * qz;
    fc.es[t] = sigma[t] * ez;
  }
  return fc;
}

std::size_t hs_required_presample(std::size_t w, HsEsMode mode) {
  return mode == HsEsMode::PastForecasts ? 2 * w : w;
}

HsForecasts historical_simulation(const std::vector<double>& returns,
                                  std::size_t w, ProbabilityLevel tau,
                                  HsEsMode mode) {
  if (w < 2) {
    throw Error(ErrorCode::InvalidArgument, "window must hold at least 2 days");
  }
  const std::size_t n = returns.size();
  if (n <= w) {
    throw Error(ErrorCode::InsufficientPresample,
                "need more than w = " + std::to_string(w) +
                    " observations before the first forecast day, got " +
                    std::to_string(n));
  }

  HsForecasts out;
  out.first = w;
  const std::size_t days = n - w;
  out.forecasts.es.assign(days, -1.0);  // placeholder on invalid days
  out.forecasts.var.emplace(days, 0.0);
  out.forecasts.sigma.emplace(days, 1.0);
  out.valid.assign(days, 1);

  // rolling window quantiles double as the stored past VaR forecasts
  std::vector<double> window(w);
  std::vector<double> var_series(n,
                                 std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = w; t < n; ++t) {
    std::copy(returns.begin() + (t - w), returns.begin() + t, window.begin());
    var_series[t] = empirical_quantile(window, tau);
  }

  for (std::size_t t = w; t < n; ++t) {
    const std::size_t i = t - w;
    (*out.forecasts.var)[i] = var_series[t];
    const double sd = window_sd(returns.data() + (t - w), w);
    if (sd > 0.0) {
      (*out.forecasts.sigma)[i] = sd;
    } else {
      out.valid[i] = 0;
      ++out.n_degenerate;
      continue;
    }

    double es_hat;
    if (mode == HsEsMode::CurrentQuantile) {
      std::copy(returns.begin() + (t - w), returns.begin() + t,
                window.begin());
      es_hat = empirical_es(window, tau);
    } else {
      if (t < 2 * w) {
        out.valid[i] = 0;
        ++out.n_no_coverage;
        continue;
      }
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t back = 1; back <= w; ++back) {
        const std::size_t s = t - back;
        if (returns[s] <= var_series[s]) {
          sum += returns[s];
          ++count;
        }
      }
      if (count == 0) {
        out.valid[i] = 0;
        ++out.n_empty_violation;
        continue;
      }
      es_hat = sum / static_cast<double>(count);
    }
    if (!(es_hat < 0.0)) {
      out.valid[i] = 0;
      ++out.n_degenerate;
      continue;
    }
    out.forecasts.es[i] = es_hat;
  }
  return out;
}

MisspecKind misspec_kind_from_char(char c) {
  switch (c) {
    case 'a': return MisspecKind::A;
    case 'b': return MisspecKind::B;
    case 'c': return MisspecKind::C;
    case 'd': return MisspecKind::D;
    case 'e': return MisspecKind::E;
    default:
      throw Error(ErrorCode::InvalidArgument,
                  std::string("unknown design axis '") + c + "'");
  }
}

char misspec_kind_char(MisspecKind kind) {
  switch (kind) {
    case MisspecKind::A: return 'a';
    case MisspecKind::B: return 'b';
    case MisspecKind::C: return 'c';
    case MisspecKind::D: return 'd';
    case MisspecKind::E: return 'e';
  }
  return '?';
}

std::pair<double, double> misspec_range(MisspecKind kind) {
  switch (kind) {
    case MisspecKind::A: return {0.03, 0.20};
    case MisspecKind::B: return {0.01, 0.50};
    case MisspecKind::C: return {0.90, 0.999};
    case MisspecKind::D:
      return {3.0, std::numeric_limits<double>::infinity()};
    case MisspecKind::E: return {0.005, 0.05};
  }
  return {0.0, 0.0};
}

double misspec_true_value(MisspecKind kind, const GarchSpec& base,
                          ProbabilityLevel tau) {
  switch (kind) {
    case MisspecKind::A: return base.alpha;
    case MisspecKind::B: return unconditional_variance(base);
    case MisspecKind::C: return base.alpha + base.beta;
    case MisspecKind::D:
      if (std::holds_alternative<StandardNormal>(base.law)) {
        return std::numeric_limits<double>::infinity();
      }
      return std::get<StandardizedT>(base.law).nu;
    case MisspecKind::E: return tau;
  }
  return 0.0;
}

MisspecModel apply_misspec(const GarchSpec& base, const MisspecDesign& design,
                           ProbabilityLevel tau) {
  validate_spec(base);
  const auto [lo, hi] = misspec_range(design.kind);
  if (!(design.value >= lo && design.value <= hi)) {
    throw Error(ErrorCode::InvalidSpec,
                "design value " + std::to_string(design.value) +
                    " outside sweep range");
  }
  MisspecModel out;
  out.spec = base;
  out.effective_tau = tau;
  // The sweep's fixed point reproduces the base model verbatim, not through
  // the transform arithmetic, so the true grid point is an exact identity.
  const double truth = misspec_true_value(design.kind, base, tau);
  if (design.value == truth ||
      (std::isfinite(truth) &&
       std::fabs(design.value - truth) <=
           1e-12 * std::max(1.0, std::fabs(truth)))) {
    return out;
  }
  switch (design.kind) {
    case MisspecKind::A: {
      const double persistence = base.alpha + base.beta;
      out.spec.alpha = design.value;
      out.spec.beta = persistence - design.value;
      break;
    }
    case MisspecKind::B: {
      out.spec.omega = design.value * (1.0 - base.alpha - base.beta);
      break;
    }
    case MisspecKind::C: {
      const double scale = design.value / (base.alpha + base.beta);
      out.spec.alpha = base.alpha * scale;
      out.spec.beta = base.beta * scale;
      out.spec.omega = unconditional_variance(base) * (1.0 - design.value);
      break;
    }
    case MisspecKind::D: {
      if (std::isinf(design.value)) {
        out.spec.law = StandardNormal{};
      } else {
        out.spec.law = StandardizedT{design.value};
      }
      break;
    }
    case MisspecKind::E: {
      out.effective_tau = design.value;
      break;
    }
  }
  validate_spec(out.spec);
  return out;
}

std::vector<double> misspec_default_grid(MisspecKind kind,
                                         const GarchSpec& base,
                                         ProbabilityLevel tau) {
  constexpr int kPoints = 21;
  const auto [lo, hi] = misspec_range(kind);
  std::vector<double> grid;
  grid.reserve(kPoints + 1);
  if (kind == MisspecKind::D) {
    // even in 1/nu so the heavy-tail end is resolved; 1/nu = 0 is normal
    const double ulo = 0.0;
    const double uhi = 1.0 / lo;
    for (int i = 0; i < kPoints; ++i) {
      const double u = uhi + (ulo - uhi) * i / (kPoints - 1);
      grid.push_back(u == 0.0 ? std::numeric_limits<double>::infinity()
                              : 1.0 / u);
    }
  } else {
    for (int i = 0; i < kPoints; ++i) {
      grid.push_back(lo + (hi - lo) * i / (kPoints - 1));
    }
    grid.back() = hi;  // endpoint rounding must not escape the sweep range
  }
  const double truth = misspec_true_value(kind, base, tau);
  const bool present =
      std::any_of(grid.begin(), grid.end(), [&](double g) {
        return g == truth || std::fabs(g - truth) < 1e-12 * std::fabs(truth);
      });
  if (!present) {
    grid.push_back(truth);
    std::sort(grid.begin(), grid.end());
  }
  return grid;
}

}  // namespace esb
