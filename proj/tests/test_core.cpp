#include <doctest.h>

#include <vector>

#include "esb/core.hpp"

using namespace esb;

namespace {

ForecastSet es_only(std::vector<double> es) {
  ForecastSet fc;
  fc.es = std::move(es);
  return fc;
}

}  // namespace

TEST_CASE("validate_pair accepts aligned negative es forecasts") {
  const ValidationResult v =
      validate_pair({0.1, -0.2, 0.3}, es_only({-1.0, -1.0, -1.0}));
  CHECK(v.n == 3);
  CHECK(v.warnings.empty());
}

TEST_CASE("validate_pair rejects length mismatch") {
  CHECK_THROWS_AS(validate_pair({0.1, -0.2, 0.3}, es_only({-1.0, -1.0})),
                  Error);
  try {
    validate_pair({0.1, -0.2, 0.3}, es_only({-1.0, -1.0}));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
    CHECK(e.is_input_error());
  }
}

TEST_CASE("validate_pair rejects nonnegative es forecasts") {
  try {
    validate_pair({0.1, -0.2, 0.3}, es_only({-1.0, -1.0, 0.5}));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonNegativeEsForecast);
  }
}

TEST_CASE("validate_pair rejects nonpositive sigma") {
  ForecastSet fc = es_only({-1.0, -1.0});
  fc.sigma = std::vector<double>{1.0, 0.0};
  try {
    validate_pair({0.1, -0.2}, fc);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveSigma);
  }
}

TEST_CASE("validate_pair warns when var sits below es") {
  ForecastSet fc = es_only({-1.0, -1.0});
  fc.var = std::vector<double>{-0.5, -2.0};
  const ValidationResult v = validate_pair({0.1, -0.2}, fc);
  CHECK(v.var_below_es == 1);
  CHECK(v.warnings.size() == 1);
}

TEST_CASE("tail_count rounds away floating noise in tau*n") {
  CHECK(tail_count(0.4, 5) == 2);
  CHECK(tail_count(0.025, 1) == 1);
  CHECK(tail_count(0.5, 4) == 2);
  // 0.07 * 100 lands just above 7 in floating point
  CHECK(tail_count(0.07, 100) == 7);
  CHECK(tail_count(0.999, 3) == 3);
}

TEST_CASE("empirical_quantile is the type-1 order statistic") {
  CHECK(empirical_quantile({-5, -3, -1, 0, 2}, 0.4) == -3);
  CHECK(empirical_quantile({7}, 0.025) == 7);
  CHECK(empirical_quantile({1, 2, 3, 4}, 0.5) == 2);
  // order must not matter
  CHECK(empirical_quantile({2, 0, -5, -1, -3}, 0.4) == -3);
}

TEST_CASE("empirical_es averages the tail below the type-1 quantile") {
  CHECK(empirical_es({-5, -3, -1, 0, 2}, 0.4) == doctest::Approx(-4.0));
  CHECK(empirical_es({3.25, 3.25, 3.25, 3.25}, 0.6) == doctest::Approx(3.25));
  const std::vector<double> xs{-10, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(empirical_es(xs, 0.1) == doctest::Approx(-10.0));
}

TEST_CASE("empirical_es with ties keeps every copy of the quantile value") {
  // quantile at tau=0.5 is 1; both 1s sit weakly below it
  CHECK(empirical_es({1, 1, 2, 3}, 0.5) == doctest::Approx(1.0));
}
