// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "ptl/spectra.hpp"

using namespace ptl;
using namespace ptl::testing;

namespace {

// Scalar toy: A = -1 on a one-dimensional state with M = 1.
GeneratorAssembly scalar_toy() {
  GeneratorAssembly a;
  a.A.resize(1, 1);
  a.A.insert(0, 0) = -1.0;
  a.M.resize(1, 1);
  a.M.insert(0, 0) = 1.0;
  a.layout.n_x = 0;
  a.layout.n_s = 1;
  return a;
}

// Operator M-norm of a dense matrix X: ||L^T X L^{-T}||_2.
double m_norm(const Eigen::MatrixXcd& X, const SparseMatrix& M) {
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(M)};
  const Eigen::MatrixXcd L = Eigen::MatrixXd(llt.matrixL()).cast<std::complex<double>>();
  const Eigen::MatrixXcd W = L.transpose().triangularView<Eigen::Upper>().solve(
      Eigen::MatrixXcd::Identity(M.rows(), M.cols()));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(L.transpose() * X * W);
  return svd.singularValues()(0);
}

}  // namespace

TEST_CASE("scalar toy resolvent and scan") {
  const auto a = scalar_toy();
  CHECK(resolvent_norm(a, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  const auto scan = resolvent_scan(a, 1.0, 1000.0, 40);
  for (std::size_t i = 0; i < scan.lambdas.size(); ++i)
    CHECK(scan.norms[i] == doctest::Approx(1.0 / std::sqrt(1.0 + scan.lambdas[i] * scan.lambdas[i])).epsilon(1e-13));
  CHECK(scan.fit_exponent == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK(scan.lambdas.front() == 1.0);
  CHECK(scan.lambdas.back() == 1000.0);
  CHECK_THROWS_AS(resolvent_scan(a, 0.0, 10.0, 5), ValidationError);
}

TEST_CASE("conservative spectrum sits on the imaginary axis") {
  const auto c = conservative(40, 16);
  const auto pairs = eigenvalues(c, 0, 0.0);
  CHECK(pairs.size() == static_cast<std::size_t>(c.size()));
  double worst = 0.0;
  for (const auto& pr : pairs) {
    worst = std::max(worst, std::abs(pr.value.real()));
    CHECK(pr.converged);
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("damped spectrum lies in the open left half plane and avoids zero") {
  const auto a = damped(40, 16);
  const auto pairs = eigenvalues(a, 0, 0.0);
  double max_re = -1e300, min_abs = 1e300;
  for (const auto& pr : pairs) {
    max_re = std::max(max_re, pr.value.real());
    min_abs = std::min(min_abs, std::abs(pr.value));
    CHECK(pr.residual <= 1e-8 * std::max(1.0, std::abs(pr.value)));
  }
  MESSAGE("max Re = " << max_re << ", min |lambda| = " << min_abs);
  CHECK(max_re < 0.0);
  CHECK(min_abs > 0.0);
}

TEST_CASE("resolvent at zero matches the M-norm of the dense inverse") {
  const auto a = damped(10, 6);
  const Eigen::MatrixXd A(a.A);
  const double direct = m_norm(A.inverse().cast<std::complex<double>>(), a.M);
  CHECK(resolvent_norm(a, 0.0) == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("resolvent is even in lambda and bounded by the spectral distance") {
  const auto a = damped(16, 8);
  SpectralContext ctx(a);
  const auto pairs = ctx.eigenvalues(0, 0.0);
  for (double lambda : {0.3, 1.0, 2.5, 4.0, 7.0, 11.0, 16.0, 25.0, 40.0, 80.0}) {
    const double plus = ctx.resolvent_norm(lambda);
    CHECK(ctx.resolvent_norm(-lambda) == doctest::Approx(plus).epsilon(1e-10));
    double dist = 1e300;
    for (const auto& pr : pairs) dist = std::min(dist, std::abs(std::complex<double>(0.0, lambda) - pr.value));
    CHECK(1.0 / plus <= dist * (1 + 1e-10));
  }
}

TEST_CASE("conservative resolvent blows up near an eigenfrequency") {
  const auto c = conservative(12, 4);
  SpectralContext ctx(c);
  const auto pairs = ctx.eigenvalues(1, {0.0, 3.0});
  const double omega = pairs.front().value.imag();
  SpectralOptions opt;
  const auto near = resolvent_scan(c, omega * (1 - 1e-9), omega * (1 + 1e-9), 3, 1, opt);
  CHECK(near.norms[1] > 1e6);
  CHECK(near.near_singular[1]);
  CHECK(std::isfinite(near.norms[0]));
}

TEST_CASE("iterative paths agree with the dense ones") {
  const auto a = damped(20, 8);
  SpectralOptions iterative;
  iterative.dense_limit = 10;
  SpectralContext dense(a), sparse(a, iterative);
  REQUIRE(dense.dense());
  REQUIRE_FALSE(sparse.dense());
  for (double lambda : {0.0, 1.5, 9.0, 30.0})
    CHECK(sparse.resolvent_norm(lambda) == doctest::Approx(dense.resolvent_norm(lambda)).epsilon(1e-8));

  const std::complex<double> shift{-0.05, 4.0};
  const auto d = dense.eigenvalues(6, shift);
  const auto s = sparse.eigenvalues(6, shift);
  REQUIRE(s.size() == 6);
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(s[i].value - d[i].value) <= 1e-8 * std::abs(d[i].value));
    CHECK(s[i].converged);
  }
}

TEST_CASE("scan is independent of the thread count") {
  const auto a = damped(12, 6);
  SpectralContext ctx(a);
  const auto one = resolvent_scan(ctx, 1.0, 50.0, 17, 1);
  const auto four = resolvent_scan(ctx, 1.0, 50.0, 17, 4);
  CHECK(one.norms == four.norms);
  CHECK(scan_csv(one) == scan_csv(four));
  CHECK(scan_csv(one).rfind("lambda,norm,scaled_norm\n", 0) == 0);
  CHECK(one.sup_scaled == *std::max_element(one.scaled.begin(), one.scaled.end()));
}

TEST_CASE("top decade slope of an exact power law") {
  std::vector<double> x, y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(std::pow(10.0, i / 10.0));
    y.push_back(3.0 * std::pow(x.back(), 1.6));
  }
  CHECK(top_decade_slope(x, y) == doctest::Approx(1.6).epsilon(1e-12));
}
