#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esb/backtests.hpp"
#include "esb/core.hpp"
#include "esb/evaluate.hpp"
#include "esb/io.hpp"
#include "esb/rng.hpp"
#include "esb/simulate.hpp"

namespace {

using namespace esb;

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = csv.find(',', start);
    const std::string item = csv.substr(
        start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

Hypothesis parse_side(const std::string& s) {
  if (s == "two-sided") return Hypothesis::TwoSided;
  if (s == "one-sided-less") return Hypothesis::OneSidedLess;
  throw Error(ErrorCode::ConfigError,
              "--side must be two-sided or one-sided-less");
}

TestMode parse_mode(const std::string& s) {
  if (s == "asymptotic") return TestMode::Asymptotic;
  if (s == "bootstrap") return TestMode::Bootstrap;
  throw Error(ErrorCode::ConfigError,
              "--mode must be asymptotic or bootstrap");
}

HsEsMode parse_hs_mode(const std::string& s) {
  if (s == "past-forecasts") return HsEsMode::PastForecasts;
  if (s == "current-quantile") return HsEsMode::CurrentQuantile;
  throw Error(ErrorCode::ConfigError,
              "--hs-mode must be past-forecasts or current-quantile");
}

std::string out_path(const std::string& dir, const char* name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

SimPath tail_of(const SimPath& path, std::size_t t) {
  SimPath out;
  out.returns.assign(path.returns.end() - t, path.returns.end());
  out.sigma.assign(path.sigma.end() - t, path.sigma.end());
  out.z.assign(path.z.end() - t, path.z.end());
  return out;
}

struct BacktestArgs {
  std::string input;
  double tau = 0.025;
  std::string tests = "esr-bivariate,esr-intercept";
  std::string side = "two-sided";
  std::string mode = "asymptotic";
  int bootstrap = 1000;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_backtest(const BacktestArgs& a, const std::string& command_line) {
  const std::string started = utc_timestamp();
  const BacktestInput input = read_backtest_csv(a.input);
  const ValidationResult validation =
      validate_pair(input.returns, input.forecasts);
  for (const std::string& w : validation.warnings) {
    std::fprintf(stderr, "warning: %s\n", w.c_str());
  }
  if (!(a.tau > 0.0 && a.tau < 1.0)) {
    throw Error(ErrorCode::ConfigError, "--tau must lie in (0,1)");
  }
  const Hypothesis side = parse_side(a.side);
  const TestMode mode = parse_mode(a.mode);
  if (a.bootstrap < 1) {
    throw Error(ErrorCode::ConfigError, "--bootstrap must be positive");
  }

  const std::vector<std::string> names = split_list(a.tests);
  if (names.empty()) {
    throw Error(ErrorCode::ConfigError, "--tests must name at least one test");
  }
  std::vector<TestReport> reports;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const std::string& name = names[k];
    BootstrapOptions boot;
    boot.n_draws = a.bootstrap;
    boot.seed = derive_seed(a.seed, k);
    if (name == "esr-bivariate") {
      if (side != Hypothesis::TwoSided) {
        throw Error(ErrorCode::ConfigError,
                    "esr-bivariate has no one-sided form; drop it from "
                    "--tests or use --side two-sided");
      }
      reports.push_back(
          esr_bivariate(input.returns, input.forecasts, a.tau, mode, boot));
    } else if (name == "esr-intercept") {
      reports.push_back(esr_intercept(input.returns, input.forecasts, a.tau,
                                      side, mode, boot));
    } else if (name == "er") {
      reports.push_back(
          er_test(input.returns, input.forecasts, a.tau, side, false, boot));
    } else if (name == "er-std") {
      reports.push_back(
          er_test(input.returns, input.forecasts, a.tau, side, true, boot));
    } else if (name == "cc-simple") {
      reports.push_back(cc_test(input.returns, input.forecasts, a.tau,
                                CcVariant::Simple, side));
    } else if (name == "cc-general") {
      reports.push_back(cc_test(input.returns, input.forecasts, a.tau,
                                CcVariant::General, side));
    } else {
      throw Error(ErrorCode::ConfigError,
                  "unknown test '" + name +
                      "' (known: esr-bivariate, esr-intercept, er, er-std, "
                      "cc-simple, cc-general)");
    }
  }

  write_backtest_report_json(out_path(a.out_dir, "report.json"), a.tau,
                             validation, reports);
  write_backtest_report_csv(out_path(a.out_dir, "report.csv"), reports);

  std::ifstream raw(a.input, std::ios::binary);
  std::ostringstream raw_buf;
  raw_buf << raw.rdbuf();
  RunManifest m;
  m.command_line = command_line;
  m.config_hash = fnv1a_hex(command_line + '\n' + raw_buf.str());
  m.master_seed = a.seed;
  m.started_at = started;
  m.finished_at = utc_timestamp();
  write_manifest_json(out_path(a.out_dir, "manifest.json"), m);
  return 0;
}

struct SimulateArgs {
  std::string dgp = "garch-t";
  std::size_t t = 1000;
  std::size_t burnin = 1000;
  std::uint64_t seed = 0;
  std::string forecaster = "oracle";
  std::size_t w = 250;
  std::size_t presample = 0;
  double tau = 0.025;
  std::string hs_mode = "past-forecasts";
  std::string out_dir = ".";
};

int run_simulate(const SimulateArgs& a, const std::string& command_line) {
  const std::string started = utc_timestamp();
  if (!(a.tau > 0.0 && a.tau < 1.0)) {
    throw Error(ErrorCode::ConfigError, "--tau must lie in (0,1)");
  }
  if (a.t < 1) {
    throw Error(ErrorCode::ConfigError, "--T must be positive");
  }
  const DgpSpec spec = dgp_from_name(a.dgp);
  const HsEsMode hs_mode = parse_hs_mode(a.hs_mode);
  const SimPath path = simulate(spec, a.presample + a.t, a.burnin, a.seed);
  write_path_csv(out_path(a.out_dir, "paths.csv"), path);

  std::vector<std::string> dates;
  ReturnSeries returns;
  ForecastSet forecasts;
  if (a.forecaster == "oracle") {
    const SimPath tail = tail_of(path, a.t);
    forecasts = oracle_forecasts(tail, innovation_law(spec), a.tau);
    returns = tail.returns;
    dates.reserve(a.t);
    for (std::size_t s = a.presample; s < a.presample + a.t; ++s) {
      dates.push_back(std::to_string(s));
    }
  } else if (a.forecaster == "hs") {
    const std::size_t required = hs_required_presample(a.w, hs_mode);
    if (a.presample < required) {
      throw Error(ErrorCode::InsufficientPresample,
                  "the rolling-window forecaster needs --presample >= " +
                      std::to_string(required) + " (got " +
                      std::to_string(a.presample) + ")");
    }
    const HsForecasts hs =
        historical_simulation(path.returns, a.w, a.tau, hs_mode);
    forecasts.var.emplace();
    forecasts.sigma.emplace();
    std::size_t dropped = 0;
    for (std::size_t s = a.presample; s < a.presample + a.t; ++s) {
      const std::size_t row = s - hs.first;
      if (!hs.valid[row]) {
        ++dropped;
        continue;
      }
      dates.push_back(std::to_string(s));
      returns.push_back(path.returns[s]);
      forecasts.es.push_back(hs.forecasts.es[row]);
      forecasts.var->push_back((*hs.forecasts.var)[row]);
      forecasts.sigma->push_back((*hs.forecasts.sigma)[row]);
    }
    if (dropped > 0) {
      std::fprintf(stderr,
                   "warning: dropped %zu of %zu days with undefined "
                   "rolling-window forecasts\n",
                   dropped, a.t);
    }
    if (returns.empty()) {
      throw Error(ErrorCode::NoViolations,
                  "every requested day lacked a defined forecast");
    }
  } else {
    throw Error(ErrorCode::ConfigError,
                "--forecaster must be oracle or hs");
  }
  write_series_csv(out_path(a.out_dir, "forecasts.csv"), dates, returns,
                   forecasts);

  RunManifest m;
  m.command_line = command_line;
  m.config_hash = fnv1a_hex(command_line);
  m.master_seed = a.seed;
  m.started_at = started;
  m.finished_at = utc_timestamp();
  write_manifest_json(out_path(a.out_dir, "manifest.json"), m);
  return 0;
}

struct McArgs {
  std::string study;
  std::string config;
  std::string out_dir = ".";
};

int run_mc(const McArgs& a, std::optional<unsigned> threads,
           const std::string& command_line) {
  const std::string started = utc_timestamp();
  McRunSpec rs = parse_mc_config_file(a.config);
  if (threads) rs.cfg.threads = *threads;
  rs.cfg.verbose = true;

  std::vector<ExclusionRow> exclusions;
  if (a.study == "size") {
    const SizeStudy study =
        run_size_study(rs.dgp, rs.tests, rs.side, rs.cfg);
    write_size_csv(out_path(a.out_dir, "sizes.csv"), study);
    exclusions = study.exclusions;
  } else if (a.study == "power") {
    const PowerStudy study =
        run_power_study(rs.dgp, rs.tests, rs.side, rs.cfg);
    write_power_csv(out_path(a.out_dir, "power.csv"), study);
    write_pauc_csv(out_path(a.out_dir, "pauc.csv"), study);
    write_roc_csv(out_path(a.out_dir, "roc.csv"), study);
    exclusions = study.exclusions;
    if (study.dropped_forecast_days > 0) {
      std::fprintf(stderr,
                   "note: %zu rolling-window days without defined "
                   "forecasts were dropped\n",
                   study.dropped_forecast_days);
    }
  } else if (a.study == "sweep") {
    if (!rs.design) {
      throw Error(ErrorCode::ConfigError,
                  "sweep study needs a design key (a, b, c, d, or e)");
    }
    const auto* base = std::get_if<GarchSpec>(&rs.dgp);
    if (base == nullptr) {
      throw Error(ErrorCode::ConfigError,
                  "sweep study needs a garch base model");
    }
    const SweepStudy study = run_misspec_sweep(*base, *rs.design, rs.grid,
                                               rs.tests, rs.side, rs.cfg);
    write_sweep_csv(out_path(a.out_dir, "sweep.csv"), study);
    exclusions = study.exclusions;
  } else {
    throw Error(ErrorCode::ConfigError,
                "study must be size, power, or sweep");
  }
  write_exclusions_csv(out_path(a.out_dir, "exclusions.csv"), exclusions);

  std::ifstream raw(a.config, std::ios::binary);
  std::ostringstream raw_buf;
  raw_buf << raw.rdbuf();
  RunManifest m;
  m.command_line = command_line;
  m.config_hash = fnv1a_hex(command_line + '\n' + raw_buf.str());
  m.master_seed = rs.cfg.master_seed;
  m.started_at = started;
  m.finished_at = utc_timestamp();
  write_manifest_json(out_path(a.out_dir, "manifest.json"), m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expected shortfall backtesting: regression-based ES tests, "
               "competitor tests, simulators, and Monte Carlo studies"};
  app.require_subcommand(1);

  std::optional<unsigned> threads;
  if (const char* env = std::getenv("ESB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0') threads = static_cast<unsigned>(v);
  }
  app.add_option_function<unsigned>(
         "--threads", [&](unsigned v) { threads = v; },
         "Worker threads for Monte Carlo studies (0 = auto; falls back to "
         "ESB_THREADS)");

  BacktestArgs ba;
  CLI::App* backtest =
      app.add_subcommand("backtest", "Run backtests on a forecast CSV");
  backtest->add_option("input", ba.input, "CSV with date,return,es[,var][,sigma]")
      ->required();
  backtest->add_option("--tau", ba.tau, "Probability level")->capture_default_str();
  backtest->add_option("--tests", ba.tests,
                       "Comma list: esr-bivariate, esr-intercept, er, "
                       "er-std, cc-simple, cc-general")->capture_default_str();
  backtest->add_option("--side", ba.side, "two-sided or one-sided-less")->capture_default_str();
  backtest->add_option("--mode", ba.mode,
                       "asymptotic or bootstrap (ESR tests)")->capture_default_str();
  backtest->add_option("--bootstrap", ba.bootstrap, "Bootstrap draws")->capture_default_str();
  backtest->add_option("--seed", ba.seed, "Bootstrap seed")->capture_default_str();
  backtest->add_option("--out", ba.out_dir, "Output directory")->capture_default_str();

  SimulateArgs sa;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Simulate a DGP and write forecasts");
  simulate_cmd->add_option("--dgp", sa.dgp, "garch-t, egarch-t, or garch-n")->capture_default_str();
  simulate_cmd->add_option("--T", sa.t, "Evaluation-window days")->capture_default_str();
  simulate_cmd->add_option("--burnin", sa.burnin, "Discarded warm-up days")->capture_default_str();
  simulate_cmd->add_option("--seed", sa.seed, "Simulation seed")->capture_default_str();
  simulate_cmd->add_option("--forecaster", sa.forecaster, "oracle or hs")->capture_default_str();
  simulate_cmd->add_option("--w", sa.w, "Rolling window length")->capture_default_str();
  simulate_cmd->add_option("--presample", sa.presample,
                           "Retained days ahead of the evaluation window")->capture_default_str();
  simulate_cmd->add_option("--tau", sa.tau, "Probability level")->capture_default_str();
  simulate_cmd->add_option("--hs-mode", sa.hs_mode,
                           "past-forecasts or current-quantile")->capture_default_str();
  simulate_cmd->add_option("--out", sa.out_dir, "Output directory")->capture_default_str();

  McArgs ma;
  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo studies");
  mc->add_option("study", ma.study, "size, power, or sweep")->required();
  mc->add_option("--config", ma.config, "Flat key = value config file")
      ->required();
  mc->add_option("--out", ma.out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string command_line = join_args(argc, argv);
  try {
    if (backtest->parsed()) return run_backtest(ba, command_line);
    if (simulate_cmd->parsed()) return run_simulate(sa, command_line);
    if (mc->parsed()) return run_mc(ma, threads, command_line);
  } catch (const esb::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.is_input_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
