#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>

#include "esb/core.hpp"

namespace esb {

// --- scalar distribution functions -----------------------------------------

double normal_pdf(double x);
double normal_cdf(double x);
double normal_quantile(double p);

double student_t_pdf(double x, double nu);
double student_t_cdf(double x, double nu);
double student_t_quantile(double p, double nu);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

/// P(X > x) for a chi-squared variable with df degrees of freedom.
double chi2_survival(double df, double x);

// --- innovation laws --------------------------------------------------------

struct StandardNormal {};

/// Student-t rescaled by sqrt((nu-2)/nu) so the variance is exactly 1.
/// Requires nu > 2; fractional degrees of freedom are fine.
struct StandardizedT {
  double nu;
};

using InnovationLaw = std::variant<StandardNormal, StandardizedT>;

void validate_law(const InnovationLaw& law);
std::string law_name(const InnovationLaw& law);

double pdf(const InnovationLaw& law, double x);
double cdf(const InnovationLaw& law, double x);
double quantile(const InnovationLaw& law, ProbabilityLevel tau);

/// Left-tail expected shortfall E[Z | Z <= quantile(tau)], closed form.
double es(const InnovationLaw& law, ProbabilityLevel tau);

/// E|Z|, closed form.
double abs_moment(const InnovationLaw& law);

/// One standardized draw. Prefer LawSampler inside simulation loops.
double sample(const InnovationLaw& law, std::mt19937_64& engine);

/// Draw stream for one law; keeps the underlying distribution objects alive
/// so cached state is not discarded between draws.
class LawSampler {
 public:
  LawSampler(const InnovationLaw& law, std::uint64_t seed);
  double next();

 private:
  bool is_normal_;
  double scale_ = 1.0;  // sqrt((nu-2)/nu) for the t case
  double nu_ = 0.0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
  std::gamma_distribution<double> chi2_;
};

}  // namespace esb
