#include "esb/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace esb {

namespace {

using ordered_json = nlohmann::json;  // std::map keys, deterministic order

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // '\n' endings everywhere
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double_or_throw(const std::string& field, ErrorCode code,
                             const std::string& where) {
  const std::string v = trim(field);
  double x = 0.0;
  const char* begin = v.data();
  const char* end = begin + v.size();
  const auto [ptr, ec] = std::from_chars(begin, end, x);
  if (ec != std::errc{} || ptr != end || v.empty()) {
    throw Error(code, where + ": cannot parse '" + field + "' as a number");
  }
  return x;
}

std::uint64_t parse_u64_or_throw(const std::string& field, ErrorCode code,
                                 const std::string& where) {
  const std::string v = trim(field);
  std::uint64_t x = 0;
  const char* begin = v.data();
  const char* end = begin + v.size();
  const auto [ptr, ec] = std::from_chars(begin, end, x);
  if (ec != std::errc{} || ptr != end || v.empty()) {
    throw Error(code,
                where + ": cannot parse '" + field + "' as an integer");
  }
  return x;
}

const char* side_label(Hypothesis side) { return hypothesis_name(side); }

ordered_json report_to_json(const TestReport& r) {
  ordered_json j;
  j["test"] = r.test_name;
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["side"] = side_label(r.side);
  j["mode"] = test_mode_name(r.mode);
  if (r.n_bootstrap) j["n_bootstrap"] = *r.n_bootstrap;
  ordered_json d;
  for (const auto& [k, v] : r.diagnostics) d[k] = v;
  j["diagnostics"] = d;
  return j;
}

}  // namespace

const char* library_version() { return "0.1.0"; }

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

BacktestInput read_backtest_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::CsvParseError, path + ":1: empty file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line, ',');
  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (name != "date" && name != "return" && name != "es" &&
        name != "var" && name != "sigma") {
      throw Error(ErrorCode::CsvParseError,
                  path + ":1: unknown column '" + name + "'");
    }
    if (!columns.emplace(name, i).second) {
      throw Error(ErrorCode::CsvParseError,
                  path + ":1: duplicate column '" + name + "'");
    }
  }
  for (const char* required : {"date", "return", "es"}) {
    if (columns.find(required) == columns.end()) {
      throw Error(ErrorCode::CsvParseError,
                  path + ":1: missing required column '" +
                      std::string(required) + "'");
    }
  }

  BacktestInput input;
  const bool has_var = columns.count("var") > 0;
  const bool has_sigma = columns.count("sigma") > 0;
  if (has_var) input.forecasts.var.emplace();
  if (has_sigma) input.forecasts.sigma.emplace();

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::CsvParseError,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    const std::string where = path + ":" + std::to_string(line_no);
    input.dates.push_back(trim(fields[columns.at("date")]));
    input.returns.push_back(parse_double_or_throw(
        fields[columns.at("return")], ErrorCode::CsvParseError,
        where + ": column 'return'"));
    input.forecasts.es.push_back(parse_double_or_throw(
        fields[columns.at("es")], ErrorCode::CsvParseError,
        where + ": column 'es'"));
    if (has_var) {
      input.forecasts.var->push_back(parse_double_or_throw(
          fields[columns.at("var")], ErrorCode::CsvParseError,
          where + ": column 'var'"));
    }
    if (has_sigma) {
      input.forecasts.sigma->push_back(parse_double_or_throw(
          fields[columns.at("sigma")], ErrorCode::CsvParseError,
          where + ": column 'sigma'"));
    }
  }
  if (input.returns.empty()) {
    throw Error(ErrorCode::CsvParseError, path + ": no data rows");
  }
  return input;
}

void write_backtest_report_json(const std::string& path, double tau,
                                const ValidationResult& validation,
                                const std::vector<TestReport>& reports) {
  ordered_json j;
  j["schema_version"] = 1;
  j["library_version"] = library_version();
  j["tau"] = tau;
  j["n_obs"] = validation.n;
  j["warnings"] = validation.warnings;
  ordered_json tests = ordered_json::array();
  for (const TestReport& r : reports) tests.push_back(report_to_json(r));
  j["tests"] = tests;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_backtest_report_csv(const std::string& path,
                               const std::vector<TestReport>& reports) {
  auto out = open_out(path);
  out << "test,statistic,p_value,side,mode,n_bootstrap\n";
  for (const TestReport& r : reports) {
    out << r.test_name << ',' << format_double(r.statistic) << ','
        << format_double(r.p_value) << ',' << side_label(r.side) << ','
        << test_mode_name(r.mode) << ','
        << (r.n_bootstrap ? std::to_string(*r.n_bootstrap) : std::string())
        << '\n';
  }
}

void write_path_csv(const std::string& path, const SimPath& sim) {
  auto out = open_out(path);
  out << "date,return,sigma,z\n";
  for (std::size_t t = 0; t < sim.returns.size(); ++t) {
    out << t << ',' << format_double(sim.returns[t]) << ','
        << format_double(sim.sigma[t]) << ',' << format_double(sim.z[t])
        << '\n';
  }
}

void write_series_csv(const std::string& path,
                      const std::vector<std::string>& dates,
                      const ReturnSeries& returns,
                      const ForecastSet& forecasts) {
  if (dates.size() != returns.size() ||
      forecasts.es.size() != returns.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "series columns must have equal length");
  }
  auto out = open_out(path);
  out << "date,return,es";
  if (forecasts.var) out << ",var";
  if (forecasts.sigma) out << ",sigma";
  out << '\n';
  for (std::size_t t = 0; t < returns.size(); ++t) {
    out << dates[t] << ',' << format_double(returns[t]) << ','
        << format_double(forecasts.es[t]);
    if (forecasts.var) out << ',' << format_double((*forecasts.var)[t]);
    if (forecasts.sigma) out << ',' << format_double((*forecasts.sigma)[t]);
    out << '\n';
  }
}

void write_size_csv(const std::string& path, const SizeStudy& study) {
  auto out = open_out(path);
  out << "test,sample_size,nominal,size\n";
  for (const SizeRow& r : study.rows) {
    out << backtest_id_name(r.test) << ',' << r.sample_size << ','
        << format_double(r.nominal) << ',' << format_double(r.rate) << '\n';
  }
}

void write_power_csv(const std::string& path, const PowerStudy& study) {
  auto out = open_out(path);
  out << "test,sample_size,nominal,null_rate,raw_power,adjusted_power\n";
  for (std::size_t i = 0; i < study.rows.size(); ++i) {
    const PowerRow& r = study.rows[i];
    // null_rates rows were emitted in lockstep with rows
    const double null_rate =
        i < study.null_rates.size() ? study.null_rates[i].rate : 0.0;
    out << backtest_id_name(r.test) << ',' << r.sample_size << ','
        << format_double(r.nominal) << ',' << format_double(null_rate) << ','
        << format_double(r.raw_power) << ','
        << format_double(r.adjusted_power) << '\n';
  }
}

void write_pauc_csv(const std::string& path, const PowerStudy& study) {
  auto out = open_out(path);
  out << "test,sample_size,pauc\n";
  for (const PaucRow& r : study.paucs) {
    out << backtest_id_name(r.test) << ',' << r.sample_size << ','
        << format_double(r.value) << '\n';
  }
}

void write_roc_csv(const std::string& path, const PowerStudy& study) {
  auto out = open_out(path);
  out << "test,sample_size,size,power\n";
  for (const RocPointRow& r : study.roc_points) {
    out << backtest_id_name(r.test) << ',' << r.sample_size << ','
        << format_double(r.size) << ',' << format_double(r.power) << '\n';
  }
}

void write_sweep_csv(const std::string& path, const SweepStudy& study) {
  auto out = open_out(path);
  out << "test,sample_size,grid_value,nominal,raw_rate,adjusted_rate\n";
  for (const SweepRow& r : study.rows) {
    out << backtest_id_name(r.test) << ',' << r.sample_size << ','
        << format_double(r.grid_value) << ',' << format_double(r.nominal)
        << ',' << format_double(r.raw_rate) << ','
        << format_double(r.adjusted_rate) << '\n';
  }
}

void write_exclusions_csv(const std::string& path,
                          const std::vector<ExclusionRow>& rows) {
  auto out = open_out(path);
  out << "test,sample_size,arm,excluded,total\n";
  for (const ExclusionRow& r : rows) {
    out << backtest_id_name(r.test) << ',' << r.sample_size << ',' << r.arm
        << ',' << r.excluded << ',' << r.total << '\n';
  }
}

DgpSpec dgp_from_name(const std::string& name) {
  if (name == "garch-t") return GarchSpec{};
  if (name == "egarch-t") return EgarchSpec{};
  if (name == "garch-n") {
    return GarchSpec{0.05, 0.05, 0.90, StandardNormal{}};
  }
  throw Error(ErrorCode::ConfigError,
              "unknown dgp '" + name +
                  "' (known: garch-t, egarch-t, garch-n)");
}

std::string dgp_name(const DgpSpec& dgp) {
  if (const auto* g = std::get_if<GarchSpec>(&dgp)) {
    return std::holds_alternative<StandardNormal>(g->law) ? "garch-n"
                                                          : "garch-t";
  }
  return "egarch-t";
}

McRunSpec parse_mc_config_text(const std::string& text) {
  McRunSpec spec;
  spec.tests = {BacktestId::EsrInterceptAsymptotic};
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool grid_given = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(line_no) +
                      ": expected key = value, got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const std::string where = "line " + std::to_string(line_no) + ": " + key;
    if (key.empty() || value.empty()) {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(line_no) +
                      ": empty key or value");
    }

    if (key == "dgp") {
      spec.dgp = dgp_from_name(value);
    } else if (key == "tests") {
      spec.tests.clear();
      for (const std::string& item : split(value, ',')) {
        spec.tests.push_back(backtest_id_from_name(trim(item)));
      }
    } else if (key == "side") {
      if (value == "two-sided") {
        spec.side = Hypothesis::TwoSided;
      } else if (value == "one-sided-less") {
        spec.side = Hypothesis::OneSidedLess;
      } else {
        throw Error(ErrorCode::ConfigError,
                    where + ": expected two-sided or one-sided-less");
      }
    } else if (key == "design") {
      if (value.size() != 1) {
        throw Error(ErrorCode::ConfigError,
                    where + ": expected one of a, b, c, d, e");
      }
      try {
        spec.design = misspec_kind_from_char(value[0]);
      } catch (const Error&) {
        throw Error(ErrorCode::ConfigError,
                    where + ": expected one of a, b, c, d, e");
      }
    } else if (key == "grid") {
      spec.grid.clear();
      grid_given = true;
      for (const std::string& item : split(value, ',')) {
        const std::string v = trim(item);
        if (v == "inf") {
          spec.grid.push_back(std::numeric_limits<double>::infinity());
        } else {
          spec.grid.push_back(
              parse_double_or_throw(v, ErrorCode::ConfigError, where));
        }
      }
    } else if (key == "n_reps") {
      spec.cfg.n_reps = static_cast<std::size_t>(
          parse_u64_or_throw(value, ErrorCode::ConfigError, where));
    } else if (key == "sample_sizes") {
      spec.cfg.sample_sizes.clear();
      for (const std::string& item : split(value, ',')) {
        spec.cfg.sample_sizes.push_back(static_cast<std::size_t>(
            parse_u64_or_throw(trim(item), ErrorCode::ConfigError, where)));
      }
    } else if (key == "nominal_sizes") {
      spec.cfg.nominal_sizes.clear();
      for (const std::string& item : split(value, ',')) {
        spec.cfg.nominal_sizes.push_back(parse_double_or_throw(
            trim(item), ErrorCode::ConfigError, where));
      }
    } else if (key == "tau") {
      spec.cfg.tau =
          parse_double_or_throw(value, ErrorCode::ConfigError, where);
    } else if (key == "master_seed") {
      spec.cfg.master_seed =
          parse_u64_or_throw(value, ErrorCode::ConfigError, where);
    } else if (key == "bootstrap_b") {
      spec.cfg.bootstrap_b = static_cast<int>(
          parse_u64_or_throw(value, ErrorCode::ConfigError, where));
    } else if (key == "burnin") {
      spec.cfg.burnin = static_cast<std::size_t>(
          parse_u64_or_throw(value, ErrorCode::ConfigError, where));
    } else if (key == "hs_window") {
      spec.cfg.hs_window = static_cast<std::size_t>(
          parse_u64_or_throw(value, ErrorCode::ConfigError, where));
    } else if (key == "presample") {
      spec.cfg.presample = static_cast<std::size_t>(
          parse_u64_or_throw(value, ErrorCode::ConfigError, where));
    } else if (key == "hs_mode") {
      if (value == "past-forecasts") {
        spec.cfg.hs_mode = HsEsMode::PastForecasts;
      } else if (value == "current-quantile") {
        spec.cfg.hs_mode = HsEsMode::CurrentQuantile;
      } else {
        throw Error(ErrorCode::ConfigError,
                    where + ": expected past-forecasts or current-quantile");
      }
    } else if (key == "max_exclusion_fraction") {
      spec.cfg.max_exclusion_fraction =
          parse_double_or_throw(value, ErrorCode::ConfigError, where);
    } else if (key == "threads") {
      spec.cfg.threads = static_cast<unsigned>(
          parse_u64_or_throw(value, ErrorCode::ConfigError, where));
    } else {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(line_no) + ": unknown key '" +
                      key + "'");
    }
  }
  if (grid_given && !spec.design) {
    throw Error(ErrorCode::ConfigError,
                "grid given without a design axis");
  }
  return spec;
}

McRunSpec parse_mc_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_mc_config_text(buf.str());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) {
      throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
    throw;
  }
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest_json(const std::string& path, const RunManifest& m) {
  ordered_json j;
  j["schema_version"] = 1;
  j["library_version"] = library_version();
  j["command_line"] = m.command_line;
  j["config_hash"] = m.config_hash;
  j["master_seed"] = m.master_seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace esb
