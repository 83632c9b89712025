#include <doctest.h>

#include <cmath>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "esb/core.hpp"
#include "esb/distributions.hpp"
#include "esb/simulate.hpp"

using namespace esb;

TEST_CASE("garch paths are deterministic and satisfy the recursion") {
  const GarchSpec spec;
  const SimPath a = simulate_garch(spec, 500, 200, 3);
  const SimPath b = simulate_garch(spec, 500, 200, 3);
  CHECK(a.returns == b.returns);
  CHECK(a.sigma == b.sigma);
  CHECK(a.z == b.z);

  for (std::size_t t = 0; t < a.returns.size(); ++t) {
    CHECK(a.returns[t] == a.sigma[t] * a.z[t]);
  }
  for (std::size_t t = 0; t + 1 < a.returns.size(); ++t) {
    const double s2 = spec.omega + spec.alpha * a.returns[t] * a.returns[t] +
                      spec.beta * a.sigma[t] * a.sigma[t];
    CHECK(a.sigma[t + 1] * a.sigma[t + 1] ==
          doctest::Approx(s2).epsilon(1e-12));
  }
}

TEST_CASE("degenerate garch is iid with constant volatility") {
  GarchSpec spec;
  spec.omega = 0.04;
  spec.alpha = 0.0;
  spec.beta = 0.0;
  const SimPath path = simulate_garch(spec, 100, 0, 5);
  for (double s : path.sigma) CHECK(s == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("garch starts at the unconditional variance") {
  const GarchSpec spec;
  const SimPath path = simulate_garch(spec, 10, 0, 5);
  CHECK(path.sigma[0] ==
        doctest::Approx(std::sqrt(unconditional_variance(spec))).epsilon(1e-15));
  CHECK(unconditional_variance(spec) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("long-run sample variance matches the unconditional variance") {
  const GarchSpec spec;
  const SimPath path = simulate_garch(spec, 1000000, 1000, 7);
  double ss = 0.0;
  for (double y : path.returns) ss += y * y;
  const double sample_var = ss / static_cast<double>(path.returns.size());
  // squared garch returns mix slowly; the window is about four mc standard
  // errors wide
  CHECK(sample_var > 0.18);
  CHECK(sample_var < 0.22);
}

TEST_CASE("spec validation rejects nonstationary or nonpositive parameters") {
  GarchSpec g;
  g.omega = 0.0;
  CHECK_THROWS_AS(validate_spec(g), Error);
  g = GarchSpec{};
  g.alpha = 0.2;
  g.beta = 0.8;
  CHECK_THROWS_AS(validate_spec(g), Error);
  g = GarchSpec{};
  g.law = StandardizedT{2.0};
  CHECK_THROWS_AS(validate_spec(g), Error);

  EgarchSpec e;
  e.beta = 1.0;
  CHECK_THROWS_AS(validate_spec(e), Error);
}

TEST_CASE("egarch log-variance follows its recursion on the emitted path") {
  const EgarchSpec spec;
  const SimPath path = simulate_egarch(spec, 400, 100, 11);
  const double mean_abs = abs_moment(spec.law);
  for (std::size_t t = 0; t + 1 < path.returns.size(); ++t) {
    const double ls2 = 2.0 * std::log(path.sigma[t]);
    const double next = spec.omega + spec.alpha * path.z[t] +
                        spec.theta * (std::fabs(path.z[t]) - mean_abs) +
                        spec.beta * ls2;
    CHECK(2.0 * std::log(path.sigma[t + 1]) ==
          doctest::Approx(next).epsilon(1e-10));
  }
}

TEST_CASE("egarch starts at its stationary log-variance") {
  const EgarchSpec spec;
  const SimPath path = simulate_egarch(spec, 5, 0, 13);
  CHECK(2.0 * std::log(path.sigma[0]) ==
        doctest::Approx(spec.omega / (1.0 - spec.beta)).epsilon(1e-12));
  // at the fixed point, a draw at the mean magnitude moves log-variance by
  // alpha * E|z| only
  const double mean_abs = abs_moment(spec.law);
  const double next = spec.omega + spec.alpha * mean_abs +
                      spec.theta * (mean_abs - mean_abs) +
                      spec.beta * (spec.omega / (1.0 - spec.beta));
  CHECK(next == doctest::Approx(spec.omega / (1.0 - spec.beta) +
                                spec.alpha * mean_abs)
                    .epsilon(1e-12));
}

TEST_CASE("negative shocks raise egarch volatility more than positive ones") {
  const EgarchSpec spec;
  const double mean_abs = abs_moment(spec.law);
  const double base = spec.omega / (1.0 - spec.beta);
  const double z = 2.5;
  const double up = spec.omega + spec.alpha * z +
                    spec.theta * (z - mean_abs) + spec.beta * base;
  const double down = spec.omega + spec.alpha * (-z) +
                      spec.theta * (z - mean_abs) + spec.beta * base;
  CHECK(down > up);
}

TEST_CASE("oracle forecasts are the law constants under unit volatility") {
  GarchSpec spec;
  spec.omega = 1.0;
  spec.alpha = 0.0;
  spec.beta = 0.0;
  const SimPath path = simulate_garch(spec, 50, 0, 17);
  const ForecastSet fc = oracle_forecasts(path, spec.law, 0.025);
  const double v = quantile(spec.law, 0.025);
  const double e = es(spec.law, 0.025);
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK((*fc.var)[t] == doctest::Approx(v).epsilon(1e-12));
    CHECK(fc.es[t] == doctest::Approx(e).epsilon(1e-12));
    CHECK((*fc.sigma)[t] == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("oracle var and es have the advertised coverage") {
  const GarchSpec spec;
  const double tau = 0.025;
  const SimPath path = simulate_garch(spec, 1000000, 1000, 19);
  const ForecastSet fc = oracle_forecasts(path, spec.law, tau);
  std::size_t hits = 0;
  double y_sum = 0.0, e_sum = 0.0;
  for (std::size_t t = 0; t < path.returns.size(); ++t) {
    if (path.returns[t] <= (*fc.var)[t]) {
      ++hits;
      y_sum += path.returns[t];
      e_sum += fc.es[t];
    }
  }
  const double freq = static_cast<double>(hits) / path.returns.size();
  CHECK(freq > tau - 0.005);
  CHECK(freq < tau + 0.005);
  CHECK(y_sum / hits == doctest::Approx(e_sum / hits).epsilon(0.03));
}

TEST_CASE("filtering simulated returns recovers the true volatility") {
  const GarchSpec spec;
  const SimPath path = simulate_garch(spec, 400, 0, 23);  // no burnin: the
  // filter and the path then share the same starting variance
  const std::vector<double> sigma = garch_filter(spec, path.returns);
  for (std::size_t t = 0; t < sigma.size(); ++t) {
    CHECK(sigma[t] == doctest::Approx(path.sigma[t]).epsilon(1e-12));
  }

  // with burnin the initial gap dies off geometrically
  const SimPath warm = simulate_garch(spec, 400, 300, 23);
  const std::vector<double> filtered = garch_filter(spec, warm.returns);
  for (std::size_t t = 200; t < filtered.size(); ++t) {
    CHECK(filtered[t] == doctest::Approx(warm.sigma[t]).epsilon(1e-8));
  }
}

TEST_CASE("filtered forecasts scale the law constants by filtered sigma") {
  const GarchSpec spec;
  const SimPath path = simulate_garch(spec, 100, 50, 29);
  const double tau = 0.05;
  const ForecastSet fc = filtered_forecasts(spec, path.returns, tau);
  const std::vector<double> sigma = garch_filter(spec, path.returns);
  const double v = quantile(spec.law, tau);
  const double e = es(spec.law, tau);
  for (std::size_t t = 0; t < sigma.size(); ++t) {
    CHECK((*fc.var)[t] == doctest::Approx(sigma[t] * v).epsilon(1e-14));
    CHECK(fc.es[t] == doctest::Approx(sigma[t] * e).epsilon(1e-14));
  }
}

TEST_CASE("rolling-window forecasts with stored past var forecasts") {
  // day 8 window is [-5,-3,-1,0]; its min is both the day's var and, via the
  // single stored violation, the day's es
  const std::vector<double> series{-4, 10, 20, 30, -5, -3, -1, 0, 5};
  const HsForecasts hs =
      historical_simulation(series, 4, 0.25, HsEsMode::PastForecasts);
  CHECK(hs.first == 4);
  REQUIRE(hs.valid.size() == 5);
  CHECK(hs.n_no_coverage == 4);
  for (int i = 0; i < 4; ++i) CHECK(!hs.valid[i]);
  REQUIRE(hs.valid[4]);
  CHECK((*hs.forecasts.var)[4] == -5.0);
  CHECK(hs.forecasts.es[4] == -5.0);
}

TEST_CASE("rolling-window forecasts from the current window tail") {
  const std::vector<double> series{-5, -3, -1, 0, 1};
  const HsForecasts hs =
      historical_simulation(series, 4, 0.5, HsEsMode::CurrentQuantile);
  CHECK(hs.first == 4);
  REQUIRE(hs.valid[0]);
  CHECK((*hs.forecasts.var)[0] == -3.0);
  CHECK(hs.forecasts.es[0] == -4.0);
}

TEST_CASE("rolling-window edge days are flagged, not filled") {
  // strictly increasing returns never violate the rolling minimum
  std::vector<double> rising;
  for (int i = 1; i <= 9; ++i) rising.push_back(0.1 * i);
  const HsForecasts empty =
      historical_simulation(rising, 4, 0.25, HsEsMode::PastForecasts);
  CHECK(empty.n_empty_violation == 1);
  CHECK(!empty.valid[4]);

  std::vector<double> flat(9, -2.0);
  const HsForecasts degen =
      historical_simulation(flat, 4, 0.25, HsEsMode::PastForecasts);
  CHECK(degen.n_degenerate == 5);
  for (std::size_t i = 0; i < degen.valid.size(); ++i) CHECK(!degen.valid[i]);
  // the quantile of a constant window is still emitted
  CHECK((*degen.forecasts.var)[4] == -2.0);
}

TEST_CASE("rolling-window preconditions") {
  CHECK_THROWS_AS(historical_simulation({1.0, 2.0}, 1, 0.25), Error);
  CHECK_THROWS_AS(historical_simulation(std::vector<double>(4, 0.1), 4, 0.25),
                  Error);
  CHECK(hs_required_presample(250, HsEsMode::PastForecasts) == 500);
  CHECK(hs_required_presample(250, HsEsMode::CurrentQuantile) == 250);
}

TEST_CASE("misspec fixed points reproduce the base model verbatim") {
  const GarchSpec base;
  const double tau = 0.025;
  for (const auto& [kind, value] :
       std::vector<std::pair<MisspecKind, double>>{
           {MisspecKind::A, 0.1},
           {MisspecKind::B, 0.2},
           {MisspecKind::C, 0.95},
           {MisspecKind::D, 5.0},
           {MisspecKind::E, 0.025}}) {
    const MisspecModel m = apply_misspec(base, {kind, value}, tau);
    CHECK(m.spec.omega == base.omega);
    CHECK(m.spec.alpha == base.alpha);
    CHECK(m.spec.beta == base.beta);
    CHECK(m.effective_tau == tau);
    CHECK(std::get<StandardizedT>(m.spec.law).nu == 5.0);
  }
}

TEST_CASE("misspec axes move exactly one model feature") {
  const GarchSpec base;
  const double tau = 0.025;

  const MisspecModel a = apply_misspec(base, {MisspecKind::A, 0.05}, tau);
  CHECK(a.spec.alpha == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(a.spec.alpha + a.spec.beta ==
        doctest::Approx(base.alpha + base.beta).epsilon(1e-14));
  CHECK(a.spec.omega == base.omega);

  const MisspecModel b = apply_misspec(base, {MisspecKind::B, 0.4}, tau);
  CHECK(b.spec.alpha == base.alpha);
  CHECK(b.spec.beta == base.beta);
  CHECK(unconditional_variance(b.spec) == doctest::Approx(0.4).epsilon(1e-12));

  const MisspecModel c = apply_misspec(base, {MisspecKind::C, 0.99}, tau);
  CHECK(c.spec.alpha + c.spec.beta == doctest::Approx(0.99).epsilon(1e-12));
  CHECK(unconditional_variance(c.spec) ==
        doctest::Approx(unconditional_variance(base)).epsilon(1e-12));
  // innovation share scales along with persistence
  CHECK(c.spec.alpha / (c.spec.alpha + c.spec.beta) ==
        doctest::Approx(base.alpha / (base.alpha + base.beta)).epsilon(1e-12));

  const MisspecModel d3 = apply_misspec(base, {MisspecKind::D, 3.0}, tau);
  CHECK(std::get<StandardizedT>(d3.spec.law).nu == 3.0);
  CHECK(d3.spec.omega == base.omega);
  const MisspecModel dinf = apply_misspec(
      base, {MisspecKind::D, std::numeric_limits<double>::infinity()}, tau);
  CHECK(std::holds_alternative<StandardNormal>(dinf.spec.law));

  const MisspecModel e = apply_misspec(base, {MisspecKind::E, 0.01}, tau);
  CHECK(e.effective_tau == 0.01);
  CHECK(e.spec.omega == base.omega);
  CHECK(e.spec.alpha == base.alpha);
}

TEST_CASE("misspec values outside the design range are rejected") {
  const GarchSpec base;
  CHECK_THROWS_AS(apply_misspec(base, {MisspecKind::A, 0.25}, 0.025), Error);
  CHECK_THROWS_AS(apply_misspec(base, {MisspecKind::B, 0.005}, 0.025), Error);
  CHECK_THROWS_AS(apply_misspec(base, {MisspecKind::C, 0.8}, 0.025), Error);
  CHECK_THROWS_AS(apply_misspec(base, {MisspecKind::D, 2.5}, 0.025), Error);
  CHECK_THROWS_AS(apply_misspec(base, {MisspecKind::E, 0.2}, 0.025), Error);
}

TEST_CASE("default grids contain the true value and stay in range") {
  const GarchSpec base;
  const double tau = 0.025;
  for (MisspecKind kind : {MisspecKind::A, MisspecKind::B, MisspecKind::C,
                           MisspecKind::D, MisspecKind::E}) {
    const auto grid = misspec_default_grid(kind, base, tau);
    CHECK(grid.size() >= 21);
    const auto [lo, hi] = misspec_range(kind);
    const double truth = misspec_true_value(kind, base, tau);
    bool found = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(grid[i] >= lo - 1e-12);
      CHECK(grid[i] <= hi);
      if (i > 0) CHECK(grid[i] > grid[i - 1]);
      if (std::fabs(grid[i] - truth) <=
          1e-12 * std::max(1.0, std::fabs(truth))) {
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("misspec kind letters round-trip") {
  for (char c : {'a', 'b', 'c', 'd', 'e'}) {
    CHECK(misspec_kind_char(misspec_kind_from_char(c)) == c);
  }
  CHECK_THROWS_AS(misspec_kind_from_char('f'), Error);
}
