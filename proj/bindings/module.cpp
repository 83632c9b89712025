#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "esb/backtests.hpp"
#include "esb/core.hpp"
#include "esb/io.hpp"
#include "esb/jointreg.hpp"
#include "esb/simulate.hpp"

namespace py = pybind11;
using namespace esb;

namespace {

ForecastSet make_forecasts(std::vector<double> es,
                           std::optional<std::vector<double>> var,
                           std::optional<std::vector<double>> sigma) {
  ForecastSet fc;
  fc.es = std::move(es);
  fc.var = std::move(var);
  fc.sigma = std::move(sigma);
  return fc;
}

py::dict report_to_dict(const TestReport& r) {
  py::dict d;
  d["test"] = r.test_name;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["side"] = std::string(hypothesis_name(r.side));
  d["mode"] = std::string(test_mode_name(r.mode));
  if (r.n_bootstrap) {
    d["n_bootstrap"] = *r.n_bootstrap;
  } else {
    d["n_bootstrap"] = py::none();
  }
  py::dict diag;
  for (const auto& [key, value] : r.diagnostics) diag[key.c_str()] = value;
  d["diagnostics"] = diag;
  return d;
}

Hypothesis side_from_string(const std::string& s) {
  if (s == "two-sided") return Hypothesis::TwoSided;
  if (s == "one-sided-less") return Hypothesis::OneSidedLess;
  throw Error(ErrorCode::InvalidArgument,
              "side must be 'two-sided' or 'one-sided-less'");
}

TestMode mode_from_string(const std::string& s) {
  if (s == "asymptotic") return TestMode::Asymptotic;
  if (s == "bootstrap") return TestMode::Bootstrap;
  throw Error(ErrorCode::InvalidArgument,
              "mode must be 'asymptotic' or 'bootstrap'");
}

BootstrapOptions boot_options(int n_draws, std::uint64_t seed) {
  BootstrapOptions b;
  b.n_draws = n_draws;
  b.seed = seed;
  return b;
}

}  // namespace

PYBIND11_MODULE(_esbacktest, m) {
  m.doc() = "Joint quantile/ES regression backtests for tail-risk forecasts";
  m.attr("__version__") = library_version();

  py::register_exception<Error>(m, "EsbError");

  m.def("fz0_loss", &fz0_loss, py::arg("y"), py::arg("q"), py::arg("e"),
        py::arg("tau"),
        "Strictly consistent joint (quantile, ES) loss; requires e < 0.");

  m.def("empirical_quantile", &empirical_quantile, py::arg("xs"),
        py::arg("tau"), "Type-1 sample quantile, no interpolation.");

  m.def("empirical_es", &empirical_es, py::arg("xs"), py::arg("tau"),
        "Mean of observations weakly below the type-1 tau-quantile.");

  m.def(
      "validate_pair",
      [](const std::vector<double>& returns, std::vector<double> es,
         std::optional<std::vector<double>> var,
         std::optional<std::vector<double>> sigma) {
        const ValidationResult v = validate_pair(
            returns,
            make_forecasts(std::move(es), std::move(var), std::move(sigma)));
        py::dict d;
        d["n"] = v.n;
        d["var_below_es"] = v.var_below_es;
        d["warnings"] = v.warnings;
        return d;
      },
      py::arg("returns"), py::arg("es"), py::arg("var") = py::none(),
      py::arg("sigma") = py::none(),
      "Checks alignment and sign constraints; raises EsbError when the pair "
      "is unusable.");

  m.def(
      "esr_bivariate",
      [](const std::vector<double>& returns, std::vector<double> es,
         double tau, const std::string& mode, int bootstrap,
         std::uint64_t seed) {
        return report_to_dict(esr_bivariate(
            returns, make_forecasts(std::move(es), std::nullopt, std::nullopt),
            tau, mode_from_string(mode), boot_options(bootstrap, seed)));
      },
      py::arg("returns"), py::arg("es"), py::arg("tau") = 0.025,
      py::arg("mode") = "asymptotic", py::arg("bootstrap") = 1000,
      py::arg("seed") = 0,
      "Wald test of (intercept, slope) = (0, 1) in the regression of returns "
      "on the ES forecast.");

  m.def(
      "esr_intercept",
      [](const std::vector<double>& returns, std::vector<double> es,
         double tau, const std::string& side, const std::string& mode,
         int bootstrap, std::uint64_t seed) {
        return report_to_dict(esr_intercept(
            returns, make_forecasts(std::move(es), std::nullopt, std::nullopt),
            tau, side_from_string(side), mode_from_string(mode),
            boot_options(bootstrap, seed)));
      },
      py::arg("returns"), py::arg("es"), py::arg("tau") = 0.025,
      py::arg("side") = "two-sided", py::arg("mode") = "asymptotic",
      py::arg("bootstrap") = 1000, py::arg("seed") = 0,
      "t-test of a zero intercept in the forecast-error ES.");

  m.def(
      "er_test",
      [](const std::vector<double>& returns, std::vector<double> es,
         std::vector<double> var, double tau,
         std::optional<std::vector<double>> sigma, const std::string& side,
         bool standardized, int bootstrap, std::uint64_t seed) {
        return report_to_dict(
            er_test(returns,
                    make_forecasts(std::move(es), std::move(var),
                                   std::move(sigma)),
                    tau, side_from_string(side), standardized,
                    boot_options(bootstrap, seed)));
      },
      py::arg("returns"), py::arg("es"), py::arg("var"),
      py::arg("tau") = 0.025, py::arg("sigma") = py::none(),
      py::arg("side") = "one-sided-less", py::arg("standardized") = false,
      py::arg("bootstrap") = 1000, py::arg("seed") = 0,
      "Translation bootstrap t-test of mean-zero exceedance residuals.");

  m.def(
      "cc_test",
      [](const std::vector<double>& returns, std::vector<double> es,
         std::vector<double> var, double tau,
         std::optional<std::vector<double>> sigma, const std::string& variant,
         const std::string& side) {
        CcVariant v;
        if (variant == "simple") {
          v = CcVariant::Simple;
        } else if (variant == "general") {
          v = CcVariant::General;
        } else {
          throw Error(ErrorCode::InvalidArgument,
                      "variant must be 'simple' or 'general'");
        }
        return report_to_dict(
            cc_test(returns,
                    make_forecasts(std::move(es), std::move(var),
                                   std::move(sigma)),
                    tau, v, side_from_string(side)));
      },
      py::arg("returns"), py::arg("es"), py::arg("var"),
      py::arg("tau") = 0.025, py::arg("sigma") = py::none(),
      py::arg("variant") = "simple", py::arg("side") = "two-sided",
      "Conditional-calibration backtest of the (VaR, ES) pair.");

  m.def(
      "rank_by_fz0_loss",
      [](const std::vector<double>& returns,
         const std::vector<
             std::tuple<std::string, std::vector<double>, std::vector<double>>>&
             candidates,
         double tau) {
        std::vector<std::pair<std::string, ForecastSet>> sets;
        sets.reserve(candidates.size());
        for (const auto& [label, es, var] : candidates) {
          sets.emplace_back(label, make_forecasts(es, var, std::nullopt));
        }
        const auto ranked = rank_by_fz0_loss(returns, sets, tau);
        py::list out;
        for (const auto& r : ranked) {
          out.append(py::make_tuple(r.label, r.mean_loss));
        }
        return out;
      },
      py::arg("returns"), py::arg("candidates"), py::arg("tau") = 0.025,
      "Orders (label, es, var) forecast candidates by mean joint loss, best "
      "first.");

  m.def(
      "simulate",
      [](const std::string& dgp, std::size_t t, std::size_t burnin,
         std::uint64_t seed) {
        const SimPath path = simulate(dgp_from_name(dgp), t, burnin, seed);
        py::dict d;
        d["returns"] = path.returns;
        d["sigma"] = path.sigma;
        d["z"] = path.z;
        return d;
      },
      py::arg("dgp") = "garch-t", py::arg("t") = 1000,
      py::arg("burnin") = 1000, py::arg("seed") = 0,
      "Simulates t days of returns after a discarded burn-in. DGPs: garch-t, "
      "egarch-t, garch-n.");

  m.def(
      "oracle_forecasts",
      [](const std::string& dgp, const std::vector<double>& returns,
         const std::vector<double>& sigma, const std::vector<double>& z,
         double tau) {
        SimPath path;
        path.returns = returns;
        path.sigma = sigma;
        path.z = z;
        const DgpSpec spec = dgp_from_name(dgp);
        const ForecastSet fc = oracle_forecasts(path, innovation_law(spec), tau);
        py::dict d;
        d["es"] = fc.es;
        d["var"] = *fc.var;
        d["sigma"] = *fc.sigma;
        return d;
      },
      py::arg("dgp"), py::arg("returns"), py::arg("sigma"), py::arg("z"),
      py::arg("tau") = 0.025,
      "(VaR, ES) forecasts from the true conditional volatility of a "
      "simulated path.");

  m.def(
      "historical_simulation",
      [](const std::vector<double>& returns, std::size_t w, double tau,
         const std::string& mode) {
        HsEsMode m_;
        if (mode == "past-forecasts") {
          m_ = HsEsMode::PastForecasts;
        } else if (mode == "current-quantile") {
          m_ = HsEsMode::CurrentQuantile;
        } else {
          throw Error(ErrorCode::InvalidArgument,
                      "mode must be 'past-forecasts' or 'current-quantile'");
        }
        const HsForecasts hs = historical_simulation(returns, w, tau, m_);
        py::dict d;
        d["first"] = hs.first;
        d["es"] = hs.forecasts.es;
        d["var"] = *hs.forecasts.var;
        d["sigma"] = *hs.forecasts.sigma;
        d["valid"] = hs.valid;
        d["n_no_coverage"] = hs.n_no_coverage;
        d["n_empty_violation"] = hs.n_empty_violation;
        d["n_degenerate"] = hs.n_degenerate;
        return d;
      },
      py::arg("returns"), py::arg("w") = 250, py::arg("tau") = 0.025,
      py::arg("mode") = "past-forecasts",
      "Rolling-window empirical (VaR, ES) forecasts with per-day validity "
      "flags.");
}
