#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "esb/core.hpp"
#include "esb/io.hpp"
#include "esb/simulate.hpp"

using namespace esb;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  const fs::path d = fs::temp_directory_path() / "esb_io_tests";
  fs::create_directories(d);
  return d;
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = tmp_dir() / name;
  std::ofstream out(p, std::ios::binary);
  out << text;
  return p.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an Error");
  return {};
}

}  // namespace

TEST_CASE("format_double round-trips and stays short") {
  for (double x : {0.0, 1.0, 42.0, 0.1, 0.025, 1.0 / 3.0, -2.5e-7, 1e300,
                   3.141592653589793, 5e-324,
                   std::numeric_limits<double>::infinity()}) {
    const std::string s = format_double(x);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(0.025) == "0.025");
  CHECK(std::signbit(std::strtod(format_double(-0.0).c_str(), nullptr)));
}

TEST_CASE("fnv1a matches the published test vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("ab") != fnv1a_hex("ba"));
}

TEST_CASE("utc timestamps are rfc 3339") {
  const std::string ts = utc_timestamp();
  REQUIRE(ts.size() == 20);
  CHECK(ts[4] == '-');
  CHECK(ts[7] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts[13] == ':');
  CHECK(ts.back() == 'Z');
}

TEST_CASE("backtest csv columns are matched by name") {
  const std::string path = write_file(
      "by_name.csv",
      "es,date,sigma,return,var\n"
      "-2.5,2021-01-04,1.25,-0.5,-2\n"
      "-2.25,2021-01-05,1.5,3,-1.75\n");
  const BacktestInput in = read_backtest_csv(path);
  REQUIRE(in.returns.size() == 2);
  CHECK(in.dates[0] == "2021-01-04");
  CHECK(in.returns[1] == 3.0);
  CHECK(in.forecasts.es[0] == -2.5);
  REQUIRE(in.forecasts.var);
  CHECK((*in.forecasts.var)[1] == -1.75);
  REQUIRE(in.forecasts.sigma);
  CHECK((*in.forecasts.sigma)[0] == 1.25);
}

TEST_CASE("backtest csv tolerates crlf and blank lines, var and sigma are "
          "optional") {
  const std::string path = write_file("crlf.csv",
                                      "date,return,es\r\n"
                                      "d0,-1,-2\r\n"
                                      "\r\n"
                                      "d1,0.5,-1.5\r\n");
  const BacktestInput in = read_backtest_csv(path);
  REQUIRE(in.returns.size() == 2);
  CHECK(!in.forecasts.var);
  CHECK(!in.forecasts.sigma);
  CHECK(in.returns[1] == 0.5);
}

TEST_CASE("backtest csv errors carry the file position") {
  const std::string missing = write_file("missing_es.csv",
                                         "date,return,var\nd0,-1,-2\n");
  std::string msg = what_of([&] { read_backtest_csv(missing); });
  CHECK(msg.find("missing required column 'es'") != std::string::npos);
  CHECK(msg.find(":1:") != std::string::npos);

  const std::string unknown = write_file("unknown_col.csv",
                                         "date,return,es,foo\n");
  msg = what_of([&] { read_backtest_csv(unknown); });
  CHECK(msg.find("unknown column 'foo'") != std::string::npos);

  const std::string dup = write_file("dup_col.csv",
                                     "date,return,es,es\nd0,-1,-2,-2\n");
  msg = what_of([&] { read_backtest_csv(dup); });
  CHECK(msg.find("duplicate column 'es'") != std::string::npos);

  const std::string bad_number = write_file(
      "bad_number.csv", "date,return,es\nd0,-1,-2\nd1,oops,-2\n");
  msg = what_of([&] { read_backtest_csv(bad_number); });
  CHECK(msg.find(":3") != std::string::npos);
  CHECK(msg.find("'oops'") != std::string::npos);
  CHECK(msg.find("column 'return'") != std::string::npos);

  const std::string ragged = write_file("ragged.csv",
                                        "date,return,es\nd0,-1\n");
  msg = what_of([&] { read_backtest_csv(ragged); });
  CHECK(msg.find("expected 3 fields, got 2") != std::string::npos);

  const std::string empty = write_file("empty.csv", "");
  msg = what_of([&] { read_backtest_csv(empty); });
  CHECK(msg.find("empty file") != std::string::npos);

  const std::string header_only = write_file("header_only.csv",
                                             "date,return,es\n");
  msg = what_of([&] { read_backtest_csv(header_only); });
  CHECK(msg.find("no data rows") != std::string::npos);

  try {
    read_backtest_csv((tmp_dir() / "does_not_exist.csv").string());
    FAIL("expected an Error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("series csv round-trips bitwise") {
  const std::vector<std::string> dates{"d0", "d1", "d2"};
  const ReturnSeries returns{-1.0 / 3.0, 0.7071067811865476, 2e-13};
  ForecastSet fc;
  fc.es = {-2.5, -2.437, -1.0 / 7.0};
  fc.var.emplace(std::vector<double>{-2.0, -1.9, -0.1});
  fc.sigma.emplace(std::vector<double>{1.5, 0.25, 3.25});
  const std::string path = (tmp_dir() / "round_trip.csv").string();
  write_series_csv(path, dates, returns, fc);
  const BacktestInput in = read_backtest_csv(path);
  CHECK(in.dates == dates);
  CHECK(in.returns == returns);
  CHECK(in.forecasts.es == fc.es);
  CHECK(*in.forecasts.var == *fc.var);
  CHECK(*in.forecasts.sigma == *fc.sigma);

  ForecastSet es_only;
  es_only.es = {-2.5, -2.437, -1.0 / 7.0};
  const std::string path2 = (tmp_dir() / "round_trip_es_only.csv").string();
  write_series_csv(path2, dates, returns, es_only);
  const BacktestInput in2 = read_backtest_csv(path2);
  CHECK(!in2.forecasts.var);
  CHECK(!in2.forecasts.sigma);

  CHECK_THROWS_AS(write_series_csv(path, {"d0"}, returns, fc), Error);
}

TEST_CASE("path csv layout") {
  SimPath sim;
  sim.returns = {1.5, -2.0};
  sim.sigma = {1.0, 2.0};
  sim.z = {1.5, -1.0};
  const std::string path = (tmp_dir() / "path.csv").string();
  write_path_csv(path, sim);
  CHECK(read_file(path) == "date,return,sigma,z\n0,1.5,1,1.5\n1,-2,2,-1\n");
}

TEST_CASE("report csv layout") {
  TestReport boot;
  boot.test_name = "er";
  boot.statistic = 1.5;
  boot.p_value = 0.25;
  boot.side = Hypothesis::OneSidedLess;
  boot.mode = TestMode::Bootstrap;
  boot.n_bootstrap = 500;
  TestReport asym;
  asym.test_name = "cc_simple";
  asym.statistic = 3.0;
  asym.p_value = 0.5;
  const std::string path = (tmp_dir() / "report.csv").string();
  write_backtest_report_csv(path, {boot, asym});
  CHECK(read_file(path) ==
        "test,statistic,p_value,side,mode,n_bootstrap\n"
        "er,1.5,0.25,one_sided_less,bootstrap,500\n"
        "cc_simple,3,0.5,two_sided,asymptotic,\n");
}

TEST_CASE("report json carries validation context and diagnostics") {
  TestReport r;
  r.test_name = "esr_intercept";
  r.statistic = -1.25;
  r.p_value = 0.1056;
  r.side = Hypothesis::OneSidedLess;
  r.mode = TestMode::Bootstrap;
  r.n_bootstrap = 999;
  r.diagnostics["alpha_hat"] = -0.5;
  r.diagnostics["se"] = 0.4;
  ValidationResult v;
  v.n = 250;
  v.var_below_es = 1;
  v.warnings = {"var forecast below es forecast on 1 day"};
  const std::string path = (tmp_dir() / "report.json").string();
  write_backtest_report_json(path, 0.025, v, {r});

  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  CHECK(j["schema_version"] == 1);
  CHECK(j["library_version"] == library_version());
  CHECK(j["tau"] == 0.025);
  CHECK(j["n_obs"] == 250);
  REQUIRE(j["warnings"].size() == 1);
  REQUIRE(j["tests"].size() == 1);
  const auto& t = j["tests"][0];
  CHECK(t["test"] == "esr_intercept");
  CHECK(t["statistic"] == -1.25);
  CHECK(t["p_value"] == 0.1056);
  CHECK(t["side"] == "one_sided_less");
  CHECK(t["mode"] == "bootstrap");
  CHECK(t["n_bootstrap"] == 999);
  CHECK(t["diagnostics"]["alpha_hat"] == -0.5);

  TestReport no_boot;
  no_boot.test_name = "cc_simple";
  write_backtest_report_json(path, 0.025, v, {no_boot});
  const nlohmann::json j2 = nlohmann::json::parse(read_file(path));
  CHECK(!j2["tests"][0].contains("n_bootstrap"));
}

TEST_CASE("study csv layouts") {
  SizeStudy size;
  size.rows = {{BacktestId::CcSimple, 250, 0.05, 0.04}};
  const std::string size_path = (tmp_dir() / "sizes.csv").string();
  write_size_csv(size_path, size);
  CHECK(read_file(size_path) ==
        "test,sample_size,nominal,size\ncc-simple,250,0.05,0.04\n");

  PowerStudy power;
  power.rows = {{BacktestId::Er, 500, 0.05, 0.62, 0.60}};
  power.null_rates = {{BacktestId::Er, 500, 0.05, 0.055}};
  power.paucs = {{BacktestId::Er, 500, 0.0825}};
  power.roc_points = {{BacktestId::Er, 500, 0.0, 0.25},
                      {BacktestId::Er, 500, 1.0, 1.0}};
  const std::string power_path = (tmp_dir() / "power.csv").string();
  write_power_csv(power_path, power);
  CHECK(read_file(power_path) ==
        "test,sample_size,nominal,null_rate,raw_power,adjusted_power\n"
        "er,500,0.05,0.055,0.62,0.6\n");
  const std::string pauc_path = (tmp_dir() / "pauc.csv").string();
  write_pauc_csv(pauc_path, power);
  CHECK(read_file(pauc_path) == "test,sample_size,pauc\ner,500,0.0825\n");
  const std::string roc_path = (tmp_dir() / "roc.csv").string();
  write_roc_csv(roc_path, power);
  CHECK(read_file(roc_path) ==
        "test,sample_size,size,power\ner,500,0,0.25\ner,500,1,1\n");

  SweepStudy sweep;
  sweep.rows = {{BacktestId::EsrInterceptAsymptotic, 2500, 0.2, 0.05, 0.11,
                 0.1}};
  const std::string sweep_path = (tmp_dir() / "sweep.csv").string();
  write_sweep_csv(sweep_path, sweep);
  CHECK(read_file(sweep_path) ==
        "test,sample_size,grid_value,nominal,raw_rate,adjusted_rate\n"
        "esr-intercept-asym,2500,0.2,0.05,0.11,0.1\n");

  const std::string excl_path = (tmp_dir() / "exclusions.csv").string();
  write_exclusions_csv(excl_path, {{BacktestId::Er, 500, "null", 1, 100}});
  CHECK(read_file(excl_path) ==
        "test,sample_size,arm,excluded,total\ner,500,null,1,100\n");
}

TEST_CASE("manifest json") {
  RunManifest m;
  m.command_line = "esb mc size --config cfg.txt";
  m.config_hash = fnv1a_hex("payload");
  m.master_seed = 99;
  m.started_at = "2024-05-01T10:00:00Z";
  m.finished_at = "2024-05-01T10:05:00Z";
  const std::string path = (tmp_dir() / "manifest.json").string();
  write_manifest_json(path, m);
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  CHECK(j["schema_version"] == 1);
  CHECK(j["library_version"] == "0.1.0");
  CHECK(j["command_line"] == m.command_line);
  CHECK(j["config_hash"] == m.config_hash);
  CHECK(j["master_seed"] == 99);
  CHECK(j["started_at"] == m.started_at);
  CHECK(j["finished_at"] == m.finished_at);
}

TEST_CASE("dgp names round-trip") {
  CHECK(dgp_name(dgp_from_name("garch-t")) == "garch-t");
  CHECK(dgp_name(dgp_from_name("garch-n")) == "garch-n");
  CHECK(dgp_name(dgp_from_name("egarch-t")) == "egarch-t");
  const DgpSpec n = dgp_from_name("garch-n");
  const auto& g = std::get<GarchSpec>(n);
  CHECK(g.omega == 0.05);
  CHECK(std::holds_alternative<StandardNormal>(g.law));
  const std::string msg = what_of([] { dgp_from_name("garch"); });
  CHECK(msg.find("garch-t, egarch-t, garch-n") != std::string::npos);
}

TEST_CASE("mc config defaults") {
  const McRunSpec spec = parse_mc_config_text("");
  CHECK(spec.tests ==
        std::vector<BacktestId>{BacktestId::EsrInterceptAsymptotic});
  CHECK(spec.side == Hypothesis::TwoSided);
  CHECK(!spec.design);
  CHECK(spec.grid.empty());
  CHECK(spec.cfg.n_reps == 10000);
  CHECK(spec.cfg.tau == 0.025);
  CHECK(dgp_name(spec.dgp) == "garch-t");
}

TEST_CASE("mc config parses every key") {
  const McRunSpec spec = parse_mc_config_text(
      "# study settings\n"
      "dgp = egarch-t\n"
      "tests = cc-simple, er\n"
      "side = one-sided-less\n"
      "n_reps = 500\n"
      "sample_sizes = 250, 500\n"
      "nominal_sizes = 0.01, 0.05\n"
      "tau = 0.05   # trailing comment\n"
      "master_seed = 99\n"
      "bootstrap_b = 250\n"
      "burnin = 300\n"
      "hs_window = 100\n"
      "presample = 600\n"
      "hs_mode = current-quantile\n"
      "max_exclusion_fraction = 0.02\n"
      "threads = 2\n"
      "design = b\n"
      "grid = 0.1, 0.2, inf\n");
  CHECK(dgp_name(spec.dgp) == "egarch-t");
  CHECK(spec.tests ==
        std::vector<BacktestId>{BacktestId::CcSimple, BacktestId::Er});
  CHECK(spec.side == Hypothesis::OneSidedLess);
  CHECK(spec.cfg.n_reps == 500);
  CHECK(spec.cfg.sample_sizes == std::vector<std::size_t>{250, 500});
  CHECK(spec.cfg.nominal_sizes == std::vector<double>{0.01, 0.05});
  CHECK(spec.cfg.tau == 0.05);
  CHECK(spec.cfg.master_seed == 99);
  CHECK(spec.cfg.bootstrap_b == 250);
  CHECK(spec.cfg.burnin == 300);
  CHECK(spec.cfg.hs_window == 100);
  REQUIRE(spec.cfg.presample);
  CHECK(*spec.cfg.presample == 600);
  CHECK(spec.cfg.hs_mode == HsEsMode::CurrentQuantile);
  CHECK(spec.cfg.max_exclusion_fraction == 0.02);
  CHECK(spec.cfg.threads == 2);
  REQUIRE(spec.design);
  CHECK(*spec.design == MisspecKind::B);
  REQUIRE(spec.grid.size() == 3);
  CHECK(spec.grid[1] == 0.2);
  CHECK(std::isinf(spec.grid[2]));
}

TEST_CASE("mc config rejects malformed input by line") {
  std::string msg =
      what_of([] { parse_mc_config_text("n_reps = 100\nfoo = 1\n"); });
  CHECK(msg.find("line 2") != std::string::npos);
  CHECK(msg.find("unknown key 'foo'") != std::string::npos);

  msg = what_of([] { parse_mc_config_text("just words\n"); });
  CHECK(msg.find("expected key = value") != std::string::npos);

  msg = what_of([] { parse_mc_config_text("side = both\n"); });
  CHECK(msg.find("two-sided or one-sided-less") != std::string::npos);

  msg = what_of([] { parse_mc_config_text("design = q\n"); });
  CHECK(msg.find("a, b, c, d, e") != std::string::npos);

  msg = what_of([] { parse_mc_config_text("design = bb\n"); });
  CHECK(msg.find("a, b, c, d, e") != std::string::npos);

  msg = what_of([] { parse_mc_config_text("tau =\n"); });
  CHECK(msg.find("empty key or value") != std::string::npos);

  msg = what_of([] { parse_mc_config_text("n_reps = many\n"); });
  CHECK(msg.find("cannot parse 'many'") != std::string::npos);

  msg = what_of([] { parse_mc_config_text("grid = 0.1, 0.2\n"); });
  CHECK(msg.find("grid given without a design axis") != std::string::npos);
}

TEST_CASE("mc config file errors name the file") {
  const std::string path = write_file("bad_config.txt", "foo = 1\n");
  try {
    parse_mc_config_file(path);
    FAIL("expected an Error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    CHECK(std::string(e.what()).find(path) != std::string::npos);
  }
  try {
    parse_mc_config_file((tmp_dir() / "nope.txt").string());
    FAIL("expected an Error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}
