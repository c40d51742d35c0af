#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "protac/error.hpp"

namespace protac {

/// Compressed sparse row matrix, square, double entries.
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;
  std::vector<double> val;

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int k = row_ptr[size_t(i)]; k < row_ptr[size_t(i) + 1]; ++k)
        s += val[size_t(k)] * x[size_t(col[size_t(k)])];
      y[size_t(i)] = s;
    }
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = row_ptr[size_t(i)]; k < row_ptr[size_t(i) + 1]; ++k)
        if (col[size_t(k)] == i) d[size_t(i)] += val[size_t(k)];
    return d;
  }
};

/// Accumulates (i, j, v) triplets and compresses duplicates into CSR.
class TripletBuilder {
 public:
  explicit TripletBuilder(int n) : n_(n) {}

  void add(int i, int j, double v) {
    keys_.push_back((static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j));
    vals_.push_back(v);
  }

  CsrMatrix build() {
    std::vector<size_t> order(keys_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return keys_[a] < keys_[b]; });

    CsrMatrix a;
    a.n = n_;
    a.row_ptr.assign(static_cast<size_t>(n_) + 1, 0);
    std::uint64_t prev_key = ~0ULL;
    for (size_t idx : order) {
      const std::uint64_t key = keys_[idx];
      if (key == prev_key) {
        a.val.back() += vals_[idx];
      } else {
        a.col.push_back(static_cast<int>(key & 0xffffffffu));
        a.val.push_back(vals_[idx]);
        a.row_ptr[(key >> 32) + 1]++;
        prev_key = key;
      }
    }
    for (int i = 0; i < n_; ++i) a.row_ptr[size_t(i) + 1] += a.row_ptr[size_t(i)];
    return a;
  }

 private:
  int n_;
  std::vector<std::uint64_t> keys_;
  std::vector<double> vals_;
};

struct PcgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

/// Jacobi-preconditioned conjugate gradients for SPD operators.
/// `apply` maps x -> A x; `precond_diag` holds diag(A) (zeros treated as 1).
/// Converges when ||b - A x|| <= rel_tol * ||b||. Starts from x = 0, so a
/// zero right-hand side returns an exact zero solution.
template <typename ApplyFn>
PcgResult pcg_solve(ApplyFn&& apply, const std::vector<double>& b,
                    const std::vector<double>& precond_diag, std::vector<double>& x,
                    double rel_tol, int max_iter) {
  const size_t n = b.size();
  x.assign(n, 0.0);
  const double norm_b = norm2(b);
  if (norm_b == 0.0) return {0, 0.0, true};
  const double tol = rel_tol * norm_b;

  std::vector<double> inv_d(n);
  for (size_t i = 0; i < n; ++i)
    inv_d[i] = precond_diag[i] != 0.0 ? 1.0 / precond_diag[i] : 1.0;

  std::vector<double> r = b;  // x0 = 0
  std::vector<double> z(n), p(n), q(n);
  for (size_t i = 0; i < n; ++i) z[i] = inv_d[i] * r[i];
  p = z;
  double rho = dot(r, z);
  double res = norm_b;
  int it = 0;
  while (res > tol && it < max_iter) {
    apply(p, q);
    const double pq = dot(p, q);
    if (pq <= 0.0) throw numerical_error("pcg: operator not positive definite");
    const double alpha = rho / pq;
    for (size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (size_t i = 0; i < n; ++i) r[i] -= alpha * q[i];
    for (size_t i = 0; i < n; ++i) z[i] = inv_d[i] * r[i];
    const double rho_next = dot(r, z);
    const double beta = rho_next / rho;
    rho = rho_next;
    for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    res = norm2(r);
    ++it;
  }
  return {it, res / norm_b, res <= tol};
}

inline PcgResult pcg_solve(const CsrMatrix& a, const std::vector<double>& b,
                           std::vector<double>& x, double rel_tol, int max_iter) {
  return pcg_solve([&](const std::vector<double>& in, std::vector<double>& out) { a.apply(in, out); },
                   b, a.diagonal(), x, rel_tol, max_iter);
}

}  // namespace protac
