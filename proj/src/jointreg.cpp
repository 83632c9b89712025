#include "esb/jointreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "esb/distributions.hpp"

namespace esb {

namespace {

constexpr double kInfeasible = std::numeric_limits<double>::infinity();

void check_sample(const ReturnSeries& y, const Design& x,
                  ProbabilityLevel tau) {
  if (y.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty sample");
  }
  if (x.rows != y.size() || x.cols == 0) {
    throw Error(ErrorCode::LengthMismatch,
                "design is " + std::to_string(x.rows) + "x" +
                    std::to_string(x.cols) + " against " +
                    std::to_string(y.size()) + " returns");
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "tau must lie in (0, 1)");
  }
}

double sample_sd(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

double pinball_loss(const ReturnSeries& y, const Design& x,
                    const std::vector<double>& theta, double tau) {
  double sum = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double u = y[t] - x.dot(t, theta.data());
    sum += u * (tau - (u < 0.0 ? 1.0 : 0.0));
  }
  return sum / static_cast<double>(y.size());
}

// Shifts the ES intercept until every fitted ES is strictly negative.
// The leading column is the intercept, so a downward shift lowers all
// fitted values uniformly.
bool make_feasible(const ReturnSeries& y, const Design& x,
                   std::vector<double>* theta, double margin) {
  const std::size_t k = x.cols;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < y.size(); ++t) {
    worst = std::max(worst, x.dot(t, theta->data() + k));
  }
  if (!std::isfinite(worst)) return false;
  if (worst >= -margin) {
    (*theta)[k] -= worst + margin;
  }
  return true;
}

std::vector<double> jitter_point(const std::vector<double>& theta,
                                 double spread, std::mt19937_64* engine) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> out(theta);
  for (double& c : out) {
    c += 0.05 * (std::fabs(c) + 0.01 * spread) * u(*engine);
  }
  return out;
}

std::vector<double> simplex_steps(const std::vector<double>& start,
                                  double spread) {
  std::vector<double> step(start.size());
  for (std::size_t j = 0; j < start.size(); ++j) {
    step[j] = std::max(0.10 * std::fabs(start[j]), 0.02 * spread);
  }
  return step;
}

std::vector<double> pinball_start(const ReturnSeries& y, const Design& x,
                                  double tau, double spread) {
  const std::size_t k = x.cols;
  const double qy = empirical_quantile(y, tau);
  std::vector<std::vector<double>> starts;
  std::vector<double> s1(k, 0.0);
  s1[0] = qy;
  starts.push_back(s1);
  if (k >= 2) {
    double xbar = 0.0;
    for (std::size_t t = 0; t < x.rows; ++t) xbar += x.row(t)[1];
    xbar /= static_cast<double>(x.rows);
    if (std::fabs(xbar) > 1e-12) {
      std::vector<double> s2(k, 0.0);
      s2[1] = qy / xbar;
      starts.push_back(s2);
    }
  }
  auto obj = [&](const std::vector<double>& th) {
    return pinball_loss(y, x, th, tau);
  };
  std::vector<double> best;
  double best_val = kInfeasible;
  for (const auto& s : starts) {
    auto res = nelder_mead(obj, s, simplex_steps(s, spread), 1e-9, 2000);
    if (res.value < best_val) {
      best_val = res.value;
      best = res.x;
    }
  }
  std::mt19937_64 engine(0x7C5A119Bu);
  for (int r = 0; r < 2; ++r) {
    auto s = jitter_point(best, spread, &engine);
    auto res = nelder_mead(obj, s, simplex_steps(s, spread), 1e-9, 2000);
    if (res.value < best_val) {
      best_val = res.value;
      best = res.x;
    }
  }
  return best;
}

}  // namespace

Design Design::intercept_only(std::size_t t) {
  Design d;
  d.rows = t;
  d.cols = 1;
  d.data.assign(t, 1.0);
  return d;
}

Design Design::intercept_and(const std::vector<double>& x) {
  Design d;
  d.rows = x.size();
  d.cols = 2;
  d.data.resize(2 * x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    d.data[2 * t] = 1.0;
    d.data[2 * t + 1] = x[t];
  }
  return d;
}

double fz0_loss(double y, double q, double e, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "fz0_loss: tau must lie in (0, 1)");
  }
  if (!(e < 0.0)) {
    throw Error(ErrorCode::InfeasibleEs,
                "fz0_loss requires a strictly negative es argument, got " +
                    std::to_string(e));
  }
  const double hit = (y <= q) ? 1.0 : 0.0;
  return (e - q + hit * (q - y) / tau) / (-e) + std::log(-e);
}

double fz0_loss_de(double y, double q, double e, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "fz0_loss_de: tau must lie in (0, 1)");
  }
  if (!(e < 0.0)) {
    throw Error(ErrorCode::InfeasibleEs,
                "fz0_loss_de requires a strictly negative es argument");
  }
  const double hit = (y <= q) ? 1.0 : 0.0;
  return (e - q + hit * (q - y) / tau) / (e * e);
}

double average_loss(const ReturnSeries& y, const Design& x,
                    const std::vector<double>& theta, ProbabilityLevel tau) {
  check_sample(y, x, tau);
  const std::size_t k = x.cols;
  if (theta.size() != 2 * k) {
    throw Error(ErrorCode::InvalidArgument,
                "theta must stack quantile and es coefficients (size 2k)");
  }
  const double* tq = theta.data();
  const double* te = theta.data() + k;
  const double inv_tau = 1.0 / tau;
  double sum = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double* r = x.row(t);
    double q = 0.0;
    double e = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      q += r[j] * tq[j];
      e += r[j] * te[j];
    }
    if (!(e < 0.0)) return kInfeasible;
    const double excess = (y[t] <= q) ? (q - y[t]) * inv_tau : 0.0;
    sum += (e - q + excess) / (-e) + std::log(-e);
  }
  return sum / static_cast<double>(y.size());
}

SimplexResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> start, const std::vector<double>& step,
    double diameter_tol, int max_iter) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, start);
  for (std::size_t j = 0; j < n; ++j) pts[j + 1][j] += step[j];
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

  std::vector<std::size_t> order(n + 1);
  SimplexResult result;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order[0];
    const std::size_t worst = order[n];
    const std::size_t second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        diameter = std::max(diameter, std::fabs(pts[i][j] - pts[best][j]));
      }
    }
    if (diameter < diameter_tol) {
      result.converged = true;
      break;
    }

    // centroid excluding the worst vertex
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) {
        p[j] = centroid[j] + coef * (centroid[j] - pts[worst][j]);
      }
      return p;
    };

    std::vector<double> xr = blend(1.0);
    const double fr = f(xr);
    if (fr < vals[best]) {
      std::vector<double> xe = blend(2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = std::move(xe);
        vals[worst] = fe;
      } else {
        pts[worst] = std::move(xr);
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = std::move(xr);
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    std::vector<double> xc = blend(outside ? 0.5 : -0.5);
    const double fc = f(xc);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = std::move(xc);
      vals[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t j = 0; j < n; ++j) {
        pts[i][j] = pts[best][j] + 0.5 * (pts[i][j] - pts[best][j]);
      }
      vals[i] = f(pts[i]);
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (vals[i] < vals[best]) best = i;
  }
  result.x = pts[best];
  result.value = vals[best];
  result.iterations = iter;
  return result;
}

JointFit fit_joint(const ReturnSeries& y, const Design& x,
                   ProbabilityLevel tau, const FitOptions& opts) {
  check_sample(y, x, tau);
  const std::size_t k = x.cols;
  const double spread = std::max(sample_sd(y), 1e-3);

  std::vector<double> theta0;
  if (opts.start) {
    if (opts.start->size() != 2 * k) {
      throw Error(ErrorCode::InvalidArgument, "warm start has wrong size");
    }
    theta0 = *opts.start;
  } else {
    std::vector<double> thq = pinball_start(y, x, tau, spread);
    std::vector<double> residuals(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) {
      residuals[t] = y[t] - x.dot(t, thq.data());
    }
    const double shift =
        empirical_es(residuals, tau) - empirical_quantile(residuals, tau);
    theta0.assign(2 * k, 0.0);
    std::copy(thq.begin(), thq.end(), theta0.begin());
    std::copy(thq.begin(), thq.end(), theta0.begin() + k);
    theta0[k] += shift;
  }
  if (!make_feasible(y, x, &theta0, 0.05 * spread)) {
    throw Error(ErrorCode::NoFeasibleStart,
                "could not construct a start with negative fitted es");
  }

  auto obj = [&](const std::vector<double>& th) {
    return average_loss(y, x, th, tau);
  };
  if (!std::isfinite(obj(theta0))) {
    throw Error(ErrorCode::NoFeasibleStart,
                "starting point has non-finite loss");
  }

  SimplexResult best =
      nelder_mead(obj, theta0, simplex_steps(theta0, spread),
                  opts.simplex_tol, opts.max_iter);
  bool best_diam_ok = best.converged;
  double last_improvement = 0.0;
  int used = 1;
  int stale = 0;
  std::mt19937_64 engine(0x51AB0C9DULL);  // fixed: fits are pure functions
  for (int r = 1; r < opts.restarts; ++r) {
    std::vector<double> s = jitter_point(best.x, spread, &engine);
    if (!make_feasible(y, x, &s, 0.05 * spread)) continue;
    SimplexResult res = nelder_mead(obj, s, simplex_steps(s, spread),
                                    opts.simplex_tol, opts.max_iter);
    ++used;
    last_improvement = best.value - res.value;
    if (res.value < best.value) {
      best = res;
      best_diam_ok = res.converged;
    }
    if (last_improvement < opts.restart_tol) {
      if (++stale >= 2) break;
    } else {
      stale = 0;
    }
  }

  JointFit fit;
  fit.theta_q.assign(best.x.begin(), best.x.begin() + k);
  fit.theta_e.assign(best.x.begin() + k, best.x.end());
  fit.loss = best.value;
  fit.converged = best_diam_ok && last_improvement < opts.restart_tol;
  fit.restarts_used = used;
  return fit;
}

SparsityEstimate sparsity_estimate(const ReturnSeries& y, const Design& x,
                                   const JointFit& fit, ProbabilityLevel tau) {
  check_sample(y, x, tau);
  const std::size_t T = y.size();
  SparsityEstimate sp;
  sp.density.resize(T);
  sp.truncated_variance.resize(T);

  // The fitted ES scales the residual standardization; joint fits keep it
  // negative, but the intercept-only estimate can legitimately sit above
  // zero for deeply conservative forecasts, so only a vanishing value is
  // fatal here.
  std::vector<double> qf(T);
  std::vector<double> ef(T);
  for (std::size_t t = 0; t < T; ++t) {
    qf[t] = x.dot(t, fit.theta_q.data());
    ef[t] = x.dot(t, fit.theta_e.data());
    if (ef[t] == 0.0 || !std::isfinite(ef[t])) {
      throw Error(ErrorCode::SingularLambda,
                  "fitted es vanishes at row " + std::to_string(t));
    }
  }

  const double qz = normal_quantile(tau);
  const double num = 1.5 * normal_pdf(qz) * normal_pdf(qz);
  const double den = 2.0 * qz * qz + 1.0;
  sp.bandwidth = std::pow(static_cast<double>(T), -1.0 / 3.0) *
                 std::pow(normal_quantile(0.975), 2.0 / 3.0) *
                 std::cbrt(num / den);

  double kernel_sum = 0.0;
  std::vector<double> tail;
  for (std::size_t t = 0; t < T; ++t) {
    const double s = (y[t] - qf[t]) / std::fabs(ef[t]);
    kernel_sum += normal_pdf(s / sp.bandwidth);
    if (y[t] <= qf[t]) tail.push_back(s);
  }
  sp.density_at_zero =
      kernel_sum / (static_cast<double>(T) * sp.bandwidth);
  if (!(sp.density_at_zero > 0.0)) {
    throw Error(ErrorCode::SingularLambda,
                "residual density estimate vanished at the fitted quantile");
  }
  sp.n_violations = tail.size();
  if (tail.size() < 2) {
    throw Error(ErrorCode::SingularLambda,
                "need at least 2 quantile violations for the truncated "
                "variance, got " +
                    std::to_string(tail.size()));
  }
  double tmean = std::accumulate(tail.begin(), tail.end(), 0.0) /
                 static_cast<double>(tail.size());
  double tvar = 0.0;
  for (double v : tail) tvar += (v - tmean) * (v - tmean);
  tvar /= static_cast<double>(tail.size() - 1);

  for (std::size_t t = 0; t < T; ++t) {
    sp.density[t] = sp.density_at_zero / std::fabs(ef[t]);
    sp.truncated_variance[t] = ef[t] * ef[t] * tvar;
  }
  return sp;
}

JointFit estimate_covariance(JointFit fit, const ReturnSeries& y,
                             const Design& x, ProbabilityLevel tau) {
  check_sample(y, x, tau);
  const std::size_t T = y.size();
  const std::size_t k = x.cols;
  const SparsityEstimate sp = sparsity_estimate(y, x, fit, tau);

  Matrix lambda_qq(k), lambda_ee(k), c_qq(k), c_qe(k), c_ee(k);
  const double ratio = (1.0 - tau) / tau;
  for (std::size_t t = 0; t < T; ++t) {
    const double* r = x.row(t);
    const double qf = x.dot(t, fit.theta_q.data());
    const double ef = x.dot(t, fit.theta_e.data());
    const double e2 = ef * ef;
    const double gap = qf - ef;
    const double w_lqq = sp.density[t] / (tau * -ef);
    const double w_lee = 1.0 / e2;
    const double w_cqq = ratio / e2;
    const double w_cqe = -ratio * gap / (e2 * ef);
    const double w_cee =
        (sp.truncated_variance[t] / tau + ratio * gap * gap) / (e2 * e2);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double xx = r[i] * r[j];
        lambda_qq.at(i, j) += xx * w_lqq;
        lambda_ee.at(i, j) += xx * w_lee;
        c_qq.at(i, j) += xx * w_cqq;
        c_qe.at(i, j) += xx * w_cqe;
        c_ee.at(i, j) += xx * w_cee;
      }
    }
  }
  const double inv_t = 1.0 / static_cast<double>(T);
  for (Matrix* m : {&lambda_qq, &lambda_ee, &c_qq, &c_qe, &c_ee}) {
    for (double& v : m->a) v *= inv_t;
  }

  if (!invert(lambda_qq) || !invert(lambda_ee)) {
    throw Error(ErrorCode::SingularLambda,
                "curvature matrix is singular; design may be degenerate");
  }

  // sandwich blocks: Lambda^{-1} C Lambda^{-1} with block-diagonal Lambda
  const Matrix cov_qq = matmul(matmul(lambda_qq, c_qq), lambda_qq);
  const Matrix cov_qe = matmul(matmul(lambda_qq, c_qe), lambda_ee);
  const Matrix cov_ee = matmul(matmul(lambda_ee, c_ee), lambda_ee);

  Matrix full(2 * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      full.at(i, j) = cov_qq.at(i, j) * inv_t;
      full.at(i, j + k) = cov_qe.at(i, j) * inv_t;
      full.at(j + k, i) = cov_qe.at(i, j) * inv_t;
      full.at(i + k, j + k) = cov_ee.at(i, j) * inv_t;
    }
  }
  Matrix ee(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      ee.at(i, j) = cov_ee.at(i, j) * inv_t;
    }
  }
  // enforce exact symmetry against accumulation order noise
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double avg = 0.5 * (ee.at(i, j) + ee.at(j, i));
      ee.at(i, j) = avg;
      ee.at(j, i) = avg;
    }
  }
  for (std::size_t i = 0; i < 2 * k; ++i) {
    for (std::size_t j = i + 1; j < 2 * k; ++j) {
      const double avg = 0.5 * (full.at(i, j) + full.at(j, i));
      full.at(i, j) = avg;
      full.at(j, i) = avg;
    }
  }
  fit.cov_full = std::move(full);
  fit.cov_ee = std::move(ee);
  return fit;
}

}  // namespace esb
