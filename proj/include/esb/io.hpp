#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esb/core.hpp"
#include "esb/evaluate.hpp"
#include "esb/simulate.hpp"

namespace esb {

const char* library_version();

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);

// --- backtest input ---------------------------------------------------------

struct BacktestInput {
  std::vector<std::string> dates;  // opaque, passed through to outputs
  ReturnSeries returns;
  ForecastSet forecasts;
};

/// Comma-separated, one header row. Columns by name, any order: date,
/// return, es required; var, sigma optional. Errors carry line numbers.
BacktestInput read_backtest_csv(const std::string& path);

// --- writers -----------------------------------------------------------------

void write_backtest_report_json(const std::string& path, double tau,
                                const ValidationResult& validation,
                                const std::vector<TestReport>& reports);
void write_backtest_report_csv(const std::string& path,
                               const std::vector<TestReport>& reports);

/// date,return,sigma,z rows of one simulated path, date = running index.
void write_path_csv(const std::string& path, const SimPath& sim);

/// date,return,es[,var][,sigma] rows, readable by read_backtest_csv.
void write_series_csv(const std::string& path,
                      const std::vector<std::string>& dates,
                      const ReturnSeries& returns,
                      const ForecastSet& forecasts);

void write_size_csv(const std::string& path, const SizeStudy& study);
void write_power_csv(const std::string& path, const PowerStudy& study);
void write_pauc_csv(const std::string& path, const PowerStudy& study);
void write_roc_csv(const std::string& path, const PowerStudy& study);
void write_sweep_csv(const std::string& path, const SweepStudy& study);
void write_exclusions_csv(const std::string& path,
                          const std::vector<ExclusionRow>& rows);

// --- study configuration ------------------------------------------------------

/// Everything a Monte Carlo run needs beyond the study kind: the Monte Carlo
/// constants plus the process, test list, hypothesis side, and (for sweeps)
/// the design axis and optional explicit grid.
struct McRunSpec {
  McConfig cfg;
  DgpSpec dgp = GarchSpec{};
  std::vector<BacktestId> tests;
  Hypothesis side = Hypothesis::TwoSided;
  std::optional<MisspecKind> design;
  std::vector<double> grid;
};

/// Flat key = value lines, '#' comments. Unknown keys are errors that name
/// the offending key and line.
McRunSpec parse_mc_config_text(const std::string& text);
McRunSpec parse_mc_config_file(const std::string& path);

DgpSpec dgp_from_name(const std::string& name);
std::string dgp_name(const DgpSpec& dgp);

// --- run manifest --------------------------------------------------------------

struct RunManifest {
  std::string command_line;
  std::string config_hash;   // FNV-1a of the run-defining inputs
  std::uint64_t master_seed = 0;
  std::string started_at;    // UTC, RFC 3339
  std::string finished_at;
};

std::string fnv1a_hex(const std::string& data);
std::string utc_timestamp();
void write_manifest_json(const std::string& path, const RunManifest& m);

}  // namespace esb
