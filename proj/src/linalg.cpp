#include "esb/linalg.hpp"

#include <cmath>

namespace esb {

bool invert(Matrix& m) {
  const std::size_t n = m.n;
  Matrix inv(n);
  for (std::size_t i = 0; i < n; ++i) inv.at(i, i) = 1.0;

  Matrix work = m;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    double best = std::fabs(work.at(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double v = std::fabs(work.at(r, col));
      if (v > best) {
        best = v;
        pivot = r;
      }
    }
    if (!(best > 0.0) || !std::isfinite(best)) return false;
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(work.at(col, j), work.at(pivot, j));
        std::swap(inv.at(col, j), inv.at(pivot, j));
      }
    }
    const double d = work.at(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      work.at(col, j) /= d;
      inv.at(col, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work.at(r, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        work.at(r, j) -= f * work.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  for (double v : inv.a) {
    if (!std::isfinite(v)) return false;
  }
  m = inv;
  return true;
}

Matrix matmul(const Matrix& lhs, const Matrix& rhs) {
  Matrix out(lhs.n);
  for (std::size_t i = 0; i < lhs.n; ++i) {
    for (std::size_t k = 0; k < lhs.n; ++k) {
      const double l = lhs.at(i, k);
      if (l == 0.0) continue;
      for (std::size_t j = 0; j < lhs.n; ++j) {
        out.at(i, j) += l * rhs.at(k, j);
      }
    }
  }
  return out;
}

double quad_form(const std::vector<double>& v, const Matrix& m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.n; ++j) row += m.at(i, j) * v[j];
    sum += v[i] * row;
  }
  return sum;
}

double asymmetry(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    for (std::size_t j = i + 1; j < m.n; ++j) {
      worst = std::max(worst, std::fabs(m.at(i, j) - m.at(j, i)));
    }
  }
  return worst;
}

}  // namespace esb
