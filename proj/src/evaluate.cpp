#include "esb/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include "esb/rng.hpp"

namespace esb {

namespace {

// Seed-stream offsets keeping path generation, null-arm bootstraps, and
// per-grid-point bootstraps on disjoint substreams of a replication seed.
constexpr std::uint64_t kPathStream = 0x70617468;
constexpr std::uint64_t kNullStream = 0x100000;
constexpr std::uint64_t kAltStream = 0x200000;
constexpr std::uint64_t kGridStream = 0x400000;

constexpr std::size_t kSweepPresampleDefault = 500;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double oriented(double t_stat, Hypothesis side) {
  return side == Hypothesis::TwoSided ? std::fabs(t_stat) : -t_stat;
}

// Per-replication p-values and rejection statistics for a list of tests.
// NaN marks a replication lost to a statistical failure.
struct RepArrays {
  std::vector<std::vector<double>> p;
  std::vector<std::vector<double>> stat;

  RepArrays() = default;
  RepArrays(std::size_t n_tests, std::size_t n_reps)
      : p(n_tests, std::vector<double>(n_reps, kNan)),
        stat(n_tests, std::vector<double>(n_reps, kNan)) {}
};

std::optional<TestOutcome> guarded(BacktestId id, const ReturnSeries& y,
                                   const ForecastSet& fc,
                                   ProbabilityLevel tau, Hypothesis side,
                                   std::uint64_t seed, int bootstrap_b) {
  try {
    return evaluate_test(id, y, fc, tau, side, seed, bootstrap_b);
  } catch (const Error& e) {
    if (e.is_input_error()) throw;
    return std::nullopt;
  }
}

void record(RepArrays& arr, std::size_t k, std::size_t rep,
            const std::optional<TestOutcome>& outcome) {
  if (outcome) {
    arr.p[k][rep] = outcome->p_value;
    arr.stat[k][rep] = outcome->reject_stat;
  }
}

std::size_t nan_count(const std::vector<double>& xs) {
  std::size_t c = 0;
  for (double x : xs) {
    if (std::isnan(x)) ++c;
  }
  return c;
}

std::vector<double> valid_values(const std::vector<double>& xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (!std::isnan(x)) out.push_back(x);
  }
  return out;
}

double rate_at_or_below(const std::vector<double>& ps, double nominal) {
  std::size_t hits = 0;
  std::size_t valid = 0;
  for (double p : ps) {
    if (std::isnan(p)) continue;
    ++valid;
    if (p <= nominal) ++hits;
  }
  return valid == 0 ? 0.0
                    : static_cast<double>(hits) / static_cast<double>(valid);
}

void note_exclusions(BacktestId test, std::size_t t, const std::string& arm,
                     std::size_t excluded, std::size_t total, double max_frac,
                     std::vector<ExclusionRow>& rows) {
  rows.push_back({test, t, arm, excluded, total});
  if (static_cast<double>(excluded) >
      max_frac * static_cast<double>(total)) {
    throw Error(ErrorCode::ExcessiveExclusions,
                std::string(backtest_id_name(test)) + " lost " +
                    std::to_string(excluded) + " of " +
                    std::to_string(total) + " replications (arm " + arm +
                    ", T=" + std::to_string(t) + ")");
  }
}

SimPath tail_of(const SimPath& path, std::size_t t) {
  SimPath out;
  out.returns.assign(path.returns.end() - t, path.returns.end());
  out.sigma.assign(path.sigma.end() - t, path.sigma.end());
  out.z.assign(path.z.end() - t, path.z.end());
  return out;
}

ForecastSet slice_forecasts(const ForecastSet& fc, std::size_t offset,
                            std::size_t len) {
  ForecastSet out;
  out.es.assign(fc.es.begin() + offset, fc.es.begin() + offset + len);
  if (fc.var) {
    out.var.emplace(fc.var->begin() + offset,
                    fc.var->begin() + offset + len);
  }
  if (fc.sigma) {
    out.sigma.emplace(fc.sigma->begin() + offset,
                      fc.sigma->begin() + offset + len);
  }
  return out;
}

std::string format_grid_value(double g) {
  if (std::isinf(g)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", g);
  return buf;
}

// Decile progress lines on stderr; silent unless the config asks.
class Progress {
 public:
  Progress(const McConfig& cfg, const char* what, std::size_t t)
      : on_(cfg.verbose), total_(cfg.n_reps) {
    step_ = std::max<std::size_t>(1, total_ / 10);
    if (on_) {
      label_ = std::string(what) + " T=" + std::to_string(t);
      std::fprintf(stderr, "%s: 0/%zu replications\n", label_.c_str(),
                   total_);
    }
  }

  void tick() {
    if (!on_) return;
    const std::size_t d = done_.fetch_add(1) + 1;
    if (d % step_ == 0 || d == total_) {
      std::fprintf(stderr, "%s: %zu/%zu replications\n", label_.c_str(), d,
                   total_);
    }
  }

 private:
  bool on_;
  std::size_t total_;
  std::size_t step_ = 1;
  std::string label_;
  std::atomic<std::size_t> done_{0};
};

}  // namespace

const char* backtest_id_name(BacktestId id) {
  switch (id) {
    case BacktestId::EsrBivariateAsymptotic: return "esr-bivariate-asym";
    case BacktestId::EsrBivariateBootstrap: return "esr-bivariate-boot";
    case BacktestId::EsrInterceptAsymptotic: return "esr-intercept-asym";
    case BacktestId::EsrInterceptBootstrap: return "esr-intercept-boot";
    case BacktestId::Er: return "er";
    case BacktestId::ErStandardized: return "er-std";
    case BacktestId::CcSimple: return "cc-simple";
    case BacktestId::CcGeneral: return "cc-general";
  }
  return "?";
}

std::vector<BacktestId> all_backtest_ids() {
  return {BacktestId::EsrBivariateAsymptotic,
          BacktestId::EsrBivariateBootstrap,
          BacktestId::EsrInterceptAsymptotic,
          BacktestId::EsrInterceptBootstrap,
          BacktestId::Er,
          BacktestId::ErStandardized,
          BacktestId::CcSimple,
          BacktestId::CcGeneral};
}

BacktestId backtest_id_from_name(const std::string& name) {
  for (BacktestId id : all_backtest_ids()) {
    if (name == backtest_id_name(id)) return id;
  }
  std::string known;
  for (BacktestId id : all_backtest_ids()) {
    if (!known.empty()) known += ", ";
    known += backtest_id_name(id);
  }
  throw Error(ErrorCode::ConfigError,
              "unknown backtest '" + name + "' (known: " + known + ")");
}

void validate_config(const McConfig& cfg) {
  if (cfg.n_reps < 100) {
    throw Error(ErrorCode::ConfigError, "n_reps must be at least 100");
  }
  if (cfg.sample_sizes.empty()) {
    throw Error(ErrorCode::ConfigError, "sample_sizes must not be empty");
  }
  for (std::size_t t : cfg.sample_sizes) {
    if (t < 2) {
      throw Error(ErrorCode::ConfigError, "sample sizes must be at least 2");
    }
  }
  if (cfg.nominal_sizes.empty()) {
    throw Error(ErrorCode::ConfigError, "nominal_sizes must not be empty");
  }
  for (double s : cfg.nominal_sizes) {
    if (!(s > 0.0 && s < 1.0)) {
      throw Error(ErrorCode::ConfigError,
                  "nominal sizes must lie strictly inside (0,1)");
    }
  }
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0)) {
    throw Error(ErrorCode::ConfigError, "tau must lie strictly inside (0,1)");
  }
  if (cfg.bootstrap_b < 1) {
    throw Error(ErrorCode::ConfigError, "bootstrap_b must be positive");
  }
  if (cfg.hs_window < 2) {
    throw Error(ErrorCode::ConfigError, "hs_window must be at least 2");
  }
  if (!(cfg.max_exclusion_fraction >= 0.0 &&
        cfg.max_exclusion_fraction <= 1.0)) {
    throw Error(ErrorCode::ConfigError,
                "max_exclusion_fraction must lie in [0,1]");
  }
}

TestOutcome evaluate_test(BacktestId id, const ReturnSeries& returns,
                          const ForecastSet& forecasts, ProbabilityLevel tau,
                          Hypothesis side, std::uint64_t seed,
                          int bootstrap_b) {
  BootstrapOptions boot;
  boot.n_draws = bootstrap_b;
  boot.seed = seed;
  switch (id) {
    case BacktestId::EsrBivariateAsymptotic:
    case BacktestId::EsrBivariateBootstrap: {
      if (side != Hypothesis::TwoSided) {
        throw Error(ErrorCode::InvalidArgument,
                    "the bivariate test has no one-sided form");
      }
      const TestMode mode = id == BacktestId::EsrBivariateBootstrap
                                ? TestMode::Bootstrap
                                : TestMode::Asymptotic;
      const TestReport r = esr_bivariate(returns, forecasts, tau, mode, boot);
      return {r.p_value, r.statistic};
    }
    case BacktestId::EsrInterceptAsymptotic:
    case BacktestId::EsrInterceptBootstrap: {
      const TestMode mode = id == BacktestId::EsrInterceptBootstrap
                                ? TestMode::Bootstrap
                                : TestMode::Asymptotic;
      const TestReport r =
          esr_intercept(returns, forecasts, tau, side, mode, boot);
      return {r.p_value, oriented(r.statistic, side)};
    }
    case BacktestId::Er:
    case BacktestId::ErStandardized: {
      const TestReport r =
          er_test(returns, forecasts, tau, side,
                  id == BacktestId::ErStandardized, boot);
      return {r.p_value, oriented(r.statistic, side)};
    }
    case BacktestId::CcSimple:
    case BacktestId::CcGeneral: {
      const TestReport r = cc_test(returns, forecasts, tau,
                                   id == BacktestId::CcSimple
                                       ? CcVariant::Simple
                                       : CcVariant::General,
                                   side);
      // Two-sided: Wald statistic, already reject-high. One-sided: the
      // smallest component z, reject-low, so flip.
      const double stat =
          side == Hypothesis::TwoSided ? r.statistic : -r.statistic;
      return {r.p_value, stat};
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown backtest id");
}

double size_adjusted_power(const std::vector<double>& null_stats,
                           const std::vector<double>& alt_stats,
                           double nominal) {
  if (null_stats.empty() || alt_stats.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "size adjustment needs nonempty statistic samples");
  }
  if (!(nominal > 0.0 && nominal < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "nominal size must lie strictly inside (0,1)");
  }
  const double cv = empirical_quantile(null_stats, 1.0 - nominal);
  std::size_t hits = 0;
  for (double a : alt_stats) {
    if (a > cv) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(alt_stats.size());
}

PowerCurve roc_curve(const std::vector<double>& null_stats,
                     const std::vector<double>& alt_stats) {
  if (null_stats.empty() || alt_stats.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "roc needs nonempty statistic samples");
  }
  std::vector<double> ns = null_stats;
  std::vector<double> as = alt_stats;
  std::sort(ns.begin(), ns.end());
  std::sort(as.begin(), as.end());
  const auto frac_above = [](const std::vector<double>& sorted, double c) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), c);
    return static_cast<double>(sorted.end() - it) /
           static_cast<double>(sorted.size());
  };
  PowerCurve curve;
  curve.points.reserve(ns.size() + 1);
  // Critical value descends over the distinct null order statistics, so
  // sizes ascend from 0; the sub-minimum critical value closes it at (1,1).
  for (std::size_t i = ns.size(); i-- > 0;) {
    if (i + 1 < ns.size() && ns[i] == ns[i + 1]) continue;
    curve.points.emplace_back(frac_above(ns, ns[i]), frac_above(as, ns[i]));
  }
  curve.points.emplace_back(1.0, 1.0);
  return curve;
}

double pauc(const PowerCurve& curve, double lo, double hi) {
  if (!(lo < hi) || !(lo >= 0.0) || !(hi <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "pauc range must satisfy 0 <= lo < hi <= 1");
  }
  const auto& pts = curve.points;
  if (pts.size() < 2 || pts.front().first > lo || pts.back().first < hi) {
    throw Error(ErrorCode::InvalidArgument,
                "power curve does not span the integration range");
  }
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double x1 = pts[i].first;
    const double y1 = pts[i].second;
    const double x2 = pts[i + 1].first;
    const double y2 = pts[i + 1].second;
    if (x2 < x1) {
      throw Error(ErrorCode::InvalidArgument,
                  "power curve points must be sorted by size");
    }
    if (x2 <= lo || x1 >= hi || x1 == x2) continue;
    const double a = std::max(x1, lo);
    const double b = std::min(x2, hi);
    const double ya = y1 + (y2 - y1) * (a - x1) / (x2 - x1);
    const double yb = y1 + (y2 - y1) * (b - x1) / (x2 - x1);
    area += 0.5 * (ya + yb) * (b - a);
  }
  return area;
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  unsigned workers = threads;
  if (workers == 0) {
    workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
  }
  if (n < workers) workers = static_cast<unsigned>(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  const auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
        next.store(n);  // cancel remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

SizeStudy run_size_study(const DgpSpec& dgp,
                         const std::vector<BacktestId>& tests,
                         Hypothesis side, const McConfig& cfg) {
  validate_config(cfg);
  std::visit([](const auto& s) { validate_spec(s); }, dgp);
  if (tests.empty()) {
    throw Error(ErrorCode::ConfigError, "no backtests requested");
  }
  const InnovationLaw& law = innovation_law(dgp);
  SizeStudy out;
  for (std::size_t t : cfg.sample_sizes) {
    // Streams keyed by the sample size itself, so a sub-grid rerun
    // reproduces the matching slice of a full-grid run.
    const std::uint64_t t_seed = derive_seed(cfg.master_seed, t);
    RepArrays arr(tests.size(), cfg.n_reps);
    Progress progress(cfg, "size study", t);
    parallel_for(cfg.n_reps, cfg.threads, [&](std::size_t rep) {
      const std::uint64_t rep_seed = derive_seed(t_seed, rep);
      const SimPath path =
          simulate(dgp, t, cfg.burnin, derive_seed(rep_seed, kPathStream));
      const ForecastSet fc = oracle_forecasts(path, law, cfg.tau);
      for (std::size_t k = 0; k < tests.size(); ++k) {
        record(arr, k, rep,
               guarded(tests[k], path.returns, fc, cfg.tau, side,
                       derive_seed(rep_seed, kNullStream + k),
                       cfg.bootstrap_b));
      }
      progress.tick();
    });
    for (std::size_t k = 0; k < tests.size(); ++k) {
      note_exclusions(tests[k], t, "null", nan_count(arr.p[k]), cfg.n_reps,
                      cfg.max_exclusion_fraction, out.exclusions);
      for (double nominal : cfg.nominal_sizes) {
        out.rows.push_back(
            {tests[k], t, nominal, rate_at_or_below(arr.p[k], nominal)});
      }
    }
  }
  return out;
}

PowerStudy run_power_study(const DgpSpec& dgp,
                           const std::vector<BacktestId>& tests,
                           Hypothesis side, const McConfig& cfg) {
  validate_config(cfg);
  std::visit([](const auto& s) { validate_spec(s); }, dgp);
  if (tests.empty()) {
    throw Error(ErrorCode::ConfigError, "no backtests requested");
  }
  const InnovationLaw& law = innovation_law(dgp);
  const std::size_t required =
      hs_required_presample(cfg.hs_window, cfg.hs_mode);
  const std::size_t pres = cfg.presample.value_or(required);
  if (pres < required) {
    throw Error(ErrorCode::InsufficientPresample,
                "presample " + std::to_string(pres) +
                    " is below the " + std::to_string(required) +
                    " days the rolling-window forecaster needs");
  }
  PowerStudy out;
  for (std::size_t t : cfg.sample_sizes) {
    const std::uint64_t t_seed = derive_seed(cfg.master_seed, t);
    RepArrays null_arr(tests.size(), cfg.n_reps);
    RepArrays alt_arr(tests.size(), cfg.n_reps);
    std::vector<std::size_t> dropped(cfg.n_reps, 0);
    Progress progress(cfg, "power study", t);
    parallel_for(cfg.n_reps, cfg.threads, [&](std::size_t rep) {
      const std::uint64_t rep_seed = derive_seed(t_seed, rep);
      const SimPath path = simulate(dgp, pres + t, cfg.burnin,
                                    derive_seed(rep_seed, kPathStream));
      const SimPath tail = tail_of(path, t);
      const ForecastSet null_fc = oracle_forecasts(tail, law, cfg.tau);
      const HsForecasts hs = historical_simulation(
          path.returns, cfg.hs_window, cfg.tau, cfg.hs_mode);
      ReturnSeries alt_y;
      ForecastSet alt_fc;
      alt_y.reserve(t);
      alt_fc.es.reserve(t);
      alt_fc.var.emplace();
      alt_fc.sigma.emplace();
      for (std::size_t s = pres; s < pres + t; ++s) {
        const std::size_t row = s - hs.first;
        if (!hs.valid[row]) {
          ++dropped[rep];
          continue;
        }
        alt_y.push_back(path.returns[s]);
        alt_fc.es.push_back(hs.forecasts.es[row]);
        alt_fc.var->push_back((*hs.forecasts.var)[row]);
        alt_fc.sigma->push_back((*hs.forecasts.sigma)[row]);
      }
      for (std::size_t k = 0; k < tests.size(); ++k) {
        record(null_arr, k, rep,
               guarded(tests[k], tail.returns, null_fc, cfg.tau, side,
                       derive_seed(rep_seed, kNullStream + k),
                       cfg.bootstrap_b));
        record(alt_arr, k, rep,
               guarded(tests[k], alt_y, alt_fc, cfg.tau, side,
                       derive_seed(rep_seed, kAltStream + k),
                       cfg.bootstrap_b));
      }
      progress.tick();
    });
    for (std::size_t rep = 0; rep < cfg.n_reps; ++rep) {
      out.dropped_forecast_days += dropped[rep];
    }
    for (std::size_t k = 0; k < tests.size(); ++k) {
      note_exclusions(tests[k], t, "null", nan_count(null_arr.p[k]),
                      cfg.n_reps, cfg.max_exclusion_fraction, out.exclusions);
      note_exclusions(tests[k], t, "alt", nan_count(alt_arr.p[k]), cfg.n_reps,
                      cfg.max_exclusion_fraction, out.exclusions);
      const std::vector<double> null_stats = valid_values(null_arr.stat[k]);
      const std::vector<double> alt_stats = valid_values(alt_arr.stat[k]);
      for (double nominal : cfg.nominal_sizes) {
        out.null_rates.push_back(
            {tests[k], t, nominal, rate_at_or_below(null_arr.p[k], nominal)});
        out.rows.push_back({tests[k], t, nominal,
                            rate_at_or_below(alt_arr.p[k], nominal),
                            size_adjusted_power(null_stats, alt_stats,
                                                nominal)});
      }
      const PowerCurve curve = roc_curve(null_stats, alt_stats);
      out.paucs.push_back({tests[k], t, pauc(curve)});
      for (const auto& pt : curve.points) {
        out.roc_points.push_back({tests[k], t, pt.first, pt.second});
      }
    }
  }
  return out;
}

SweepStudy run_misspec_sweep(const GarchSpec& base, MisspecKind kind,
                             std::vector<double> grid,
                             const std::vector<BacktestId>& tests,
                             Hypothesis side, const McConfig& cfg) {
  validate_config(cfg);
  validate_spec(base);
  if (tests.empty()) {
    throw Error(ErrorCode::ConfigError, "no backtests requested");
  }
  if (grid.empty()) grid = misspec_default_grid(kind, base, cfg.tau);
  std::sort(grid.begin(), grid.end());
  const double truth = misspec_true_value(kind, base, cfg.tau);
  const bool has_truth =
      std::any_of(grid.begin(), grid.end(), [&](double g) {
        return g == truth ||
               (std::isfinite(truth) &&
                std::fabs(g - truth) <=
                    1e-12 * std::max(1.0, std::fabs(truth)));
      });
  if (!has_truth) {
    throw Error(ErrorCode::ConfigError,
                "sweep grid must contain the true-model value");
  }
  std::vector<MisspecModel> models;
  models.reserve(grid.size());
  for (double g : grid) {
    models.push_back(apply_misspec(base, MisspecDesign{kind, g}, cfg.tau));
  }
  const std::size_t pres = cfg.presample.value_or(kSweepPresampleDefault);

  SweepStudy out;
  out.grid = grid;
  for (std::size_t t : cfg.sample_sizes) {
    const std::uint64_t t_seed = derive_seed(cfg.master_seed, t);
    RepArrays null_arr(tests.size(), cfg.n_reps);
    std::vector<RepArrays> grid_arr(grid.size());
    for (auto& arr : grid_arr) arr = RepArrays(tests.size(), cfg.n_reps);
    Progress progress(cfg, "sweep", t);
    parallel_for(cfg.n_reps, cfg.threads, [&](std::size_t rep) {
      const std::uint64_t rep_seed = derive_seed(t_seed, rep);
      const SimPath path = simulate_garch(base, pres + t, cfg.burnin,
                                          derive_seed(rep_seed, kPathStream));
      const ReturnSeries y_test(path.returns.end() - t, path.returns.end());
      // The null arm runs the same filter as the grid arms so the true grid
      // point compares a replication against itself exactly.
      const ForecastSet null_fc = slice_forecasts(
          filtered_forecasts(base, path.returns, cfg.tau), pres, t);
      for (std::size_t k = 0; k < tests.size(); ++k) {
        record(null_arr, k, rep,
               guarded(tests[k], y_test, null_fc, cfg.tau, side,
                       derive_seed(rep_seed, kNullStream + k),
                       cfg.bootstrap_b));
      }
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const ForecastSet fc = slice_forecasts(
            filtered_forecasts(models[gi].spec, path.returns,
                               models[gi].effective_tau),
            pres, t);
        for (std::size_t k = 0; k < tests.size(); ++k) {
          record(grid_arr[gi], k, rep,
                 guarded(tests[k], y_test, fc, cfg.tau, side,
                         derive_seed(rep_seed,
                                     kGridStream + gi * 1024 + k),
                         cfg.bootstrap_b));
        }
      }
      progress.tick();
    });
    for (std::size_t k = 0; k < tests.size(); ++k) {
      note_exclusions(tests[k], t, "null", nan_count(null_arr.p[k]),
                      cfg.n_reps, cfg.max_exclusion_fraction, out.exclusions);
      const std::vector<double> null_stats = valid_values(null_arr.stat[k]);
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        note_exclusions(tests[k], t, format_grid_value(grid[gi]),
                        nan_count(grid_arr[gi].p[k]), cfg.n_reps,
                        cfg.max_exclusion_fraction, out.exclusions);
        const std::vector<double> alt_stats =
            valid_values(grid_arr[gi].stat[k]);
        for (double nominal : cfg.nominal_sizes) {
          out.rows.push_back(
              {tests[k], t, grid[gi], nominal,
               rate_at_or_below(grid_arr[gi].p[k], nominal),
               size_adjusted_power(null_stats, alt_stats, nominal)});
        }
      }
    }
  }
  return out;
}

}  // namespace esb
