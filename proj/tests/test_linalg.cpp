#include <catch2/catch_amalgamated.hpp>

#include "protac/dense.hpp"
#include "protac/rng.hpp"
#include "protac/sparse.hpp"

using namespace protac;

namespace {

// Dense SPD test matrix A = B^T B + n*I and its CSR form.
struct SpdFixture {
  DenseMatrix dense;
  CsrMatrix csr;
  std::vector<double> rhs;
};

SpdFixture make_spd(int n, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix b(n, n);
  for (double& v : b.data) v = rng.uniform(-1.0, 1.0);
  SpdFixture fx;
  fx.dense = DenseMatrix(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += b.at(k, i) * b.at(k, j);
      fx.dense.at(i, j) = s + (i == j ? n : 0.0);
    }
  TripletBuilder builder(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) builder.add(i, j, fx.dense.at(i, j));
  fx.csr = builder.build();
  fx.rhs.resize(static_cast<size_t>(n));
  for (double& v : fx.rhs) v = rng.uniform(-1.0, 1.0);
  return fx;
}

}  // namespace

TEST_CASE("triplet builder accumulates duplicates") {
  TripletBuilder builder(2);
  builder.add(0, 0, 1.0);
  builder.add(0, 0, 2.5);
  builder.add(1, 0, -1.0);
  builder.add(0, 1, 4.0);
  const CsrMatrix a = builder.build();
  REQUIRE(a.val.size() == 3);
  std::vector<double> y;
  a.apply({1.0, 1.0}, y);
  CHECK(y[0] == Catch::Approx(3.5 + 4.0));
  CHECK(y[1] == Catch::Approx(-1.0));
  const auto d = a.diagonal();
  CHECK(d[0] == Catch::Approx(3.5));
  CHECK(d[1] == 0.0);
}

TEST_CASE("cholesky solves SPD systems") {
  auto fx = make_spd(24, 7);
  const auto x = cholesky_solve(fx.dense, fx.rhs);
  std::vector<double> back;
  fx.csr.apply(x, back);
  for (size_t i = 0; i < back.size(); ++i)
    CHECK(back[i] == Catch::Approx(fx.rhs[i]).margin(1e-9));
}

TEST_CASE("cholesky rejects indefinite matrices") {
  DenseMatrix a(2, 2);
  a.at(0, 0) = 1.0;
  a.at(1, 1) = -1.0;
  CHECK_THROWS_AS(cholesky_factor(a), numerical_error);
}

TEST_CASE("pcg matches a dense direct solve") {
  auto fx = make_spd(60, 21);
  std::vector<double> x;
  const PcgResult res = pcg_solve(fx.csr, fx.rhs, x, 1e-12, 10 * 60);
  REQUIRE(res.converged);
  const auto direct = cholesky_solve(fx.dense, fx.rhs);
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - direct[i]) * (x[i] - direct[i]);
    den += direct[i] * direct[i];
  }
  CHECK(std::sqrt(num / den) < 1e-8);
}

TEST_CASE("pcg returns exact zero for a zero right-hand side") {
  auto fx = make_spd(10, 3);
  std::vector<double> x;
  const PcgResult res = pcg_solve(fx.csr, std::vector<double>(10, 0.0), x, 1e-8, 100);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  for (double v : x) CHECK(v == 0.0);
}
