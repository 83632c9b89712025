#pragma once

#include <cstddef>
#include <vector>

namespace esb {

/// Small square matrix, row-major. Everything here is sized by the number of
/// regression coefficients (at most a handful), so plain Gaussian elimination
/// is all that is needed.
struct Matrix {
  std::size_t n = 0;
  std::vector<double> a;

  Matrix() = default;
  explicit Matrix(std::size_t size) : n(size), a(size * size, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// In-place inverse via LU with partial pivoting. Returns false when the
/// matrix is numerically singular.
bool invert(Matrix& m);

Matrix matmul(const Matrix& lhs, const Matrix& rhs);

/// v' M v
double quad_form(const std::vector<double>& v, const Matrix& m);

/// Largest absolute asymmetry |m_ij - m_ji|.
double asymmetry(const Matrix& m);

}  // namespace esb
