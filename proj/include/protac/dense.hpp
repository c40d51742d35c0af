#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "protac/error.hpp"

namespace protac {

/// Row-major dense matrix.
struct DenseMatrix {
  int rows = 0, cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}

  double& at(int r, int c) { return data[static_cast<size_t>(r) * static_cast<size_t>(cols) + static_cast<size_t>(c)]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * static_cast<size_t>(cols) + static_cast<size_t>(c)]; }
};

/// In-place Cholesky factorization A = L L^T of an SPD matrix (lower triangle).
/// Throws numerical_error if a pivot is not positive.
inline void cholesky_factor(DenseMatrix& a) {
  const int n = a.rows;
  for (int j = 0; j < n; ++j) {
    double d = a.at(j, j);
    for (int k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
    if (d <= 0.0) throw numerical_error("cholesky: matrix not positive definite");
    const double ljj = std::sqrt(d);
    a.at(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (int k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = s / ljj;
    }
  }
}

/// Solves L L^T x = b given the factor from cholesky_factor. b is overwritten.
inline void cholesky_solve_inplace(const DenseMatrix& l, std::vector<double>& b) {
  const int n = l.rows;
  for (int i = 0; i < n; ++i) {
    double s = b[size_t(i)];
    for (int k = 0; k < i; ++k) s -= l.at(i, k) * b[size_t(k)];
    b[size_t(i)] = s / l.at(i, i);
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[size_t(i)];
    for (int k = i + 1; k < n; ++k) s -= l.at(k, i) * b[size_t(k)];
    b[size_t(i)] = s / l.at(i, i);
  }
}

/// Convenience one-shot SPD solve.
inline std::vector<double> cholesky_solve(DenseMatrix a, std::vector<double> b) {
  cholesky_factor(a);
  cholesky_solve_inplace(a, b);
  return b;
}

}  // namespace protac
