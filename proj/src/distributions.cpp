#include "esb/distributions.hpp"

#include <cmath>
#include <limits>

namespace esb {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kSqrt2Pi = 2.5066282746310005024;

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// Lower incomplete gamma by series, valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper incomplete gamma by continued fraction, valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  constexpr double kFpMin = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "normal_quantile: p must lie in (0, 1)");
  }
  // Acklam's rational approximation, then Halley refinement against erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int i = 0; i < 2; ++i) {
    const double e = normal_cdf(x) - p;
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * beta_cf(a, b, x) / a;
  }
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double regularized_gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi2_survival(double df, double x) {
  if (x <= 0.0) return 1.0;
  if (df == 2.0) return std::exp(-0.5 * x);
  if (df == 1.0) return std::erfc(std::sqrt(0.5 * x));
  if (x < 0.5 * df + 1.0) return 1.0 - gamma_p_series(0.5 * df, 0.5 * x);
  return gamma_q_cf(0.5 * df, 0.5 * x);
}

double student_t_pdf(double x, double nu) {
  const double lc = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                    0.5 * std::log(nu * M_PI);
  return std::exp(lc - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
}

double student_t_cdf(double x, double nu) {
  if (x == 0.0) return 0.5;
  const double z = nu / (nu + x * x);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * nu, 0.5, z);
  return x < 0.0 ? tail : 1.0 - tail;
}

double student_t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "student_t_quantile: p must lie in (0, 1)");
  }
  double lo = -1.0;
  double hi = 1.0;
  while (student_t_cdf(lo, nu) > p) lo *= 2.0;
  while (student_t_cdf(hi, nu) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double width = hi - lo;
    if (width < 1e-12 * (1.0 + std::fabs(lo) + std::fabs(hi))) break;
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, nu) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double f = student_t_cdf(x, nu) - p;
    const double d = student_t_pdf(x, nu);
    if (d > 0.0) x -= f / d;
  }
  return x;
}

void validate_law(const InnovationLaw& law) {
  if (const auto* t = std::get_if<StandardizedT>(&law)) {
    if (!(t->nu > 2.0)) {
      throw Error(ErrorCode::InvalidSpec,
                  "standardized t requires nu > 2, got " +
                      std::to_string(t->nu));
    }
  }
}

std::string law_name(const InnovationLaw& law) {
  if (std::holds_alternative<StandardNormal>(law)) return "normal";
  return "t(" + std::to_string(std::get<StandardizedT>(law).nu) + ")";
}

double pdf(const InnovationLaw& law, double x) {
  validate_law(law);
  if (std::holds_alternative<StandardNormal>(law)) return normal_pdf(x);
  const double nu = std::get<StandardizedT>(law).nu;
  const double s = std::sqrt((nu - 2.0) / nu);
  return student_t_pdf(x / s, nu) / s;
}

double cdf(const InnovationLaw& law, double x) {
  validate_law(law);
  if (std::holds_alternative<StandardNormal>(law)) return normal_cdf(x);
  const double nu = std::get<StandardizedT>(law).nu;
  const double s = std::sqrt((nu - 2.0) / nu);
  return student_t_cdf(x / s, nu);
}

double quantile(const InnovationLaw& law, ProbabilityLevel tau) {
  validate_law(law);
  if (std::holds_alternative<StandardNormal>(law)) return normal_quantile(tau);
  const double nu = std::get<StandardizedT>(law).nu;
  const double s = std::sqrt((nu - 2.0) / nu);
  return s * student_t_quantile(tau, nu);
}

double es(const InnovationLaw& law, ProbabilityLevel tau) {
  validate_law(law);
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "es: tau must lie in (0, 1)");
  }
  if (std::holds_alternative<StandardNormal>(law)) {
    return -normal_pdf(normal_quantile(tau)) / tau;
  }
  const double nu = std::get<StandardizedT>(law).nu;
  const double s = std::sqrt((nu - 2.0) / nu);
  const double tq = student_t_quantile(tau, nu);
  return -s * student_t_pdf(tq, nu) * (nu + tq * tq) / ((nu - 1.0) * tau);
}

double abs_moment(const InnovationLaw& law) {
  validate_law(law);
  if (std::holds_alternative<StandardNormal>(law)) {
    return std::sqrt(2.0 / M_PI);
  }
  const double nu = std::get<StandardizedT>(law).nu;
  return 2.0 * std::sqrt(nu - 2.0) *
         std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)) /
         (std::sqrt(M_PI) * (nu - 1.0));
}

double sample(const InnovationLaw& law, std::mt19937_64& engine) {
  validate_law(law);
  std::normal_distribution<double> normal;
  if (std::holds_alternative<StandardNormal>(law)) return normal(engine);
  const double nu = std::get<StandardizedT>(law).nu;
  std::gamma_distribution<double> chi2(0.5 * nu, 2.0);
  const double z = normal(engine);
  const double v = chi2(engine);
  return std::sqrt((nu - 2.0) / nu) * z * std::sqrt(nu / v);
}

LawSampler::LawSampler(const InnovationLaw& law, std::uint64_t seed)
    : is_normal_(std::holds_alternative<StandardNormal>(law)),
      engine_(seed),
      normal_(0.0, 1.0),
      chi2_(1.0, 2.0) {
  validate_law(law);
  if (!is_normal_) {
    nu_ = std::get<StandardizedT>(law).nu;
    scale_ = std::sqrt((nu_ - 2.0) / nu_);
    chi2_ = std::gamma_distribution<double>(0.5 * nu_, 2.0);
  }
}

double LawSampler::next() {
  const double z = normal_(engine_);
  if (is_normal_) return z;
  const double v = chi2_(engine_);
  return scale_ * z * std::sqrt(nu_ / v);
}

}  // namespace esb
