// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "ptl/discretize.hpp"

using namespace ptl;
using namespace ptl::testing;

namespace {

double min_eigenvalue(const SparseMatrix& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(M), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

SparseMatrix gram(const PhysicalParams& p, int n_x, const DampingProfile& profile = damped_profile()) {
  const auto k = reference_kernel();
  return assemble_gram_unchecked(p, profile, k, build_grids(n_x, 6, k.s_max, 40.0));
}

// Face difference (u_f - u_{f-1}) / h with zero Dirichlet ends.
template <typename Vec>
std::complex<double> face_diff(const Vec& u, int f, double h) {
  const int n = static_cast<int>(u.size());
  const std::complex<double> right = f < n ? u(f) : 0.0;
  const std::complex<double> left = f > 0 ? u(f - 1) : 0.0;
  return (right - left) / h;
}

DiscreteState smooth_state(const GeneratorAssembly& a) {
  const auto& L = a.layout;
  auto st = DiscreteState::zeros(L);
  const auto& x = a.grids.x;
  for (int i = 0; i < L.n_x; ++i) {
    st.u(i) = std::sin(x[i]);
    st.v(i) = std::sin(2 * x[i]);
    st.phi(i) = std::sin(2 * x[i]);
    st.varphi(i) = std::sin(x[i]);
    st.psi(i) = std::sin(3 * x[i]);
    st.theta(i) = std::sin(3 * x[i]);
  }
  for (int r = 0; r < L.n_eta_x(); ++r)
    for (int j = 1; j < L.n_s; ++j) st.eta(r, j) = std::sin(x[L.eta_nodes[r]]) * (1.0 - std::exp(-a.grids.s_nodes[j]));
  return st;
}

}  // namespace

TEST_CASE("layout counts and eta nodes follow the damping support") {
  const auto a = damped(20, 8);
  const auto& L = a.layout;
  CHECK(L.n_eta_x() > 0);
  CHECK(L.size() == 6 * 20 + L.n_eta_x() * 7);
  CHECK(a.A.rows() == L.size());
  for (int r = 0; r < L.n_eta_x(); ++r) {
    const int i = L.eta_nodes[r];
    CHECK((a.mu_face[i] > 0.0 || a.mu_face[i + 1] > 0.0));
  }
  // every node left of the ramp carries history, none beyond tau + h
  CHECK(L.eta_nodes.front() == 0);
  CHECK(a.grids.x[L.eta_nodes.back()] <= kPi / 2 + a.grids.h + 1e-12);

  const auto c = conservative(20, 8);
  CHECK(c.layout.n_eta_x() == 0);
  CHECK(c.size() == 120);
  CHECK_FALSE(c.damped());
}

TEST_CASE("pack and unpack round trip") {
  const auto a = damped(12, 5);
  std::mt19937_64 rng(3);
  const auto flat = random_state(a.size(), rng);
  const auto st = DiscreteState::unpack(a.layout, flat);
  CHECK(st.eta.col(0).norm() == 0.0);
  CHECK((st.pack(a.layout) - flat).norm() == 0.0);
  CHECK_THROWS_AS(DiscreteState::unpack(a.layout, ComplexVector::Zero(3)), ValidationError);
}

TEST_CASE("decoupled Gram energy of the sine interpolant approaches pi/4") {
  auto p = reference_params();
  p.gamma = 0.0;
  p.m = 0.0;
  double previous_err = 1.0;
  for (int n_x : {20, 40, 80}) {
    const auto M = gram(p, n_x, conservative_profile());
    const auto layout = make_layout(conservative_profile(), build_grids(n_x, 6, 10.0, 40.0));
    ComplexVector U = ComplexVector::Zero(layout.size());
    const double h = kPi / (n_x + 1);
    for (int i = 0; i < n_x; ++i) U(layout.u(i)) = std::sin((i + 1) * h);
    // mu = 2 in the reference set: 1/2 * mu * pi/2
    const double E = 0.5 * U.dot(M * U).real();
    const double err = std::abs(E - kPi / 2) / (kPi / 2);
    CHECK(err < 2.0 / (n_x * n_x));
    CHECK(err < previous_err);
    previous_err = err;
  }
}

TEST_CASE("Gram matrix is positive definite for the reference parameters") {
  for (int n_x : {10, 20}) CHECK(min_eigenvalue(gram(reference_params(), n_x)) > 0.0);
  const auto k = reference_kernel();
  CHECK_NOTHROW(assemble_gram(reference_params(), damped_profile(), k, build_grids(20, 6, k.s_max, 40.0)));
}

TEST_CASE("violating mu*xi > gamma^2 makes the Gram matrix indefinite") {
  // Dirichlet phi adds b_eff |phi_x|^2 >= 4 b_eff |phi|^2 on mean-zero modes, so the violation
  // only shows once gamma^2 exceeds mu (xi + 4 b_eff); a tiny b_eff exposes it at mu = xi = 1.
  PhysicalParams p = reference_params();
  p.mu = 1.0;
  p.xi = 1.0;
  p.gamma = 1.01;
  p.b = 0.001;
  p.k = 1.0;
  p.m = 0.01;
  CHECK(min_eigenvalue(gram(p, 40)) < 0.0);

  // with the reference b the same gamma is absorbed by the Poincare shift
  PhysicalParams q = reference_params();
  q.mu = 1.0;
  q.xi = 1.0;
  q.gamma = 1.01;
  CHECK(min_eigenvalue(gram(q, 20)) > 0.0);

  const auto k = reference_kernel();
  try {
    assemble_gram(p, conservative_profile(), k, build_grids(40, 6, k.s_max, 40.0));
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("most negative eigenvalue") != std::string::npos);
  }
}

TEST_CASE("positive definite iff admissible, with margins beyond the boundary shift") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  std::uniform_real_distribution<double> margin(1.1, 1.5);
  for (int n_x : {10, 20, 40}) {
    const double h = kPi / (n_x + 1);
    for (int trial = 0; trial < 8; ++trial) {
      PhysicalParams p{u(rng), u(rng), 0.0, u(rng), u(rng), u(rng), 0.0, u(rng), u(rng), u(rng), u(rng)};
      p.gamma = std::sqrt(p.mu * p.xi) * 0.95;
      p.m = std::sqrt(p.b * p.k) * 0.95;
      REQUIRE(param_violations(p).empty());
      CHECK(min_eigenvalue(gram(p, n_x)) > 0.0);

      auto q = p;
      const double b_eff = p.b - p.m * p.m / p.k;
      q.gamma = std::sqrt(p.mu * (p.xi + 4 * b_eff)) / std::cos(h) * margin(rng);
      REQUIRE_FALSE(param_violations(q).empty());
      CHECK(min_eigenvalue(gram(q, n_x)) < 0.0);

      q = p;
      q.m = std::sqrt(p.b * p.k) * (margin(rng) + 0.1);
      REQUIRE_FALSE(param_violations(q).empty());
      CHECK(min_eigenvalue(gram(q, n_x)) < 0.0);
    }
  }
}

TEST_CASE("discrete energy equals the term-by-term sum") {
  const auto a = damped(16, 9);
  const auto& L = a.layout;
  const auto& p = a.params;
  const double h = a.grids.h;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexVector U = random_state(a.size(), rng);
    const auto st = DiscreteState::unpack(L, U);
    double sum = 0.0;
    for (int i = 0; i < L.n_x; ++i) {
      sum += h * (p.rho * std::norm(st.v(i)) + p.J * std::norm(st.varphi(i)) + p.a * std::norm(st.theta(i)) +
                  p.xi * std::norm(st.phi(i)));
      const std::complex<double> ux = ((i + 1 < L.n_x ? st.u(i + 1) : 0.0) - (i > 0 ? st.u(i - 1) : 0.0)) / (2 * h);
      sum += 2 * p.gamma * h * (st.phi(i) * std::conj(ux)).real();
    }
    for (int f = 0; f <= L.n_x; ++f) {
      const auto ux = face_diff(st.u, f, h), px = face_diff(st.phi, f, h), sx = face_diff(st.psi, f, h);
      sum += h * (p.mu * std::norm(ux) + p.b * std::norm(px) + p.k * std::norm(sx) + 2 * p.m * (px * std::conj(sx)).real());
    }
    // memory: sum_j c_j sum_F mu*_F |eta_x|^2 h, eta extended by zero off its nodes
    for (int j = 1; j < L.n_s; ++j) {
      Eigen::VectorXcd eta = Eigen::VectorXcd::Zero(L.n_x);
      for (int r = 0; r < L.n_eta_x(); ++r) eta(L.eta_nodes[r]) = st.eta(r, j);
      for (int f = 0; f <= L.n_x; ++f) sum += a.memory_weight[j] * a.mu_face[f] * std::norm(face_diff(eta, f, h)) * h;
    }
    CHECK(discrete_energy(a, U) == doctest::Approx(0.5 * sum).epsilon(1e-12));
    CHECK(discrete_energy(a, 3.0 * U) == doctest::Approx(9.0 * discrete_energy(a, U)).epsilon(1e-13));
  }
  CHECK(discrete_energy(a, ComplexVector::Zero(a.size())) == 0.0);
}

TEST_CASE("damped generator is dissipative in the energy norm") {
  const auto a = damped(40, 16);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const ComplexVector U = random_state(a.size(), rng);
    const double norm2 = U.dot(a.M * U).real();
    CHECK(energy_production(a, U) <= 1e-10 * norm2);
  }
}

TEST_CASE("conservative limits produce no energy") {
  std::mt19937_64 rng(2);
  const auto c = conservative(40, 16);
  for (int trial = 0; trial < 100; ++trial) {
    const ComplexVector U = random_state(c.size(), rng);
    CHECK(std::abs(energy_production(c, U)) <= 1e-12 * U.dot(c.M * U).real());
  }
  const auto a = damped(40, 16);
  for (int trial = 0; trial < 100; ++trial) {
    ComplexVector U = random_state(a.size(), rng);
    U.tail(a.size() - 6 * a.layout.n_x).setZero();
    CHECK(std::abs(energy_production(a, U)) <= 1e-12 * U.dot(a.M * U).real());
    CHECK(dissipation_form(a, U) == 0.0);
  }
}

TEST_CASE("dissipation form against the closed-form s-integral") {
  const double kappa = 2.0;
  const auto k = make_kernel({{1.0, kappa}}, 1e-12);
  const auto a = assemble(damped_profile(), 30, 64, k);
  const auto& L = a.layout;
  auto st = DiscreteState::zeros(L);
  for (int r = 0; r < L.n_eta_x(); ++r)
    for (int j = 1; j < L.n_s; ++j)
      st.eta(r, j) = std::sin(a.grids.x[L.eta_nodes[r]]) * (1.0 - std::exp(-a.grids.s_nodes[j]));
  const auto U = st.pack(L);

  Eigen::VectorXcd profile = Eigen::VectorXcd::Zero(L.n_x);
  for (int r = 0; r < L.n_eta_x(); ++r) profile(L.eta_nodes[r]) = std::sin(a.grids.x[L.eta_nodes[r]]);
  double spatial = 0.0;
  for (int f = 0; f <= L.n_x; ++f) spatial += a.mu_face[f] * std::norm(face_diff(profile, f, a.grids.h)) * a.grids.h;

  // int_0^inf kappa^2 e^{-kappa s} (1 - e^{-s})^2 ds
  const double s_integral = kappa * kappa * (1 / kappa - 2 / (kappa + 1) + 1 / (kappa + 2));
  const double expected = 0.5 * s_integral * spatial;
  CHECK(std::abs(dissipation_form(a, U) - expected) / expected <= 1e-4);
  CHECK(dissipation_form(a, 2.0 * U) == doctest::Approx(4.0 * dissipation_form(a, U)).epsilon(1e-13));
}

TEST_CASE("energy loss rate and quadrature dissipation agree to first order in ds") {
  // nested graded grids: n_s -> 2 n_s - 1 halves every spacing
  double previous_c = 0.0;
  for (int n_s : {9, 17, 33, 65}) {
    const auto a = damped(20, n_s);
    const auto U = smooth_state(a).pack(a.layout);
    const double norm2 = U.dot(a.M * U).real();
    const double rate = dissipation_rate(a, U);
    const double quad = dissipation_form(a, U);
    double ds = 0.0;
    for (int j = 1; j < n_s; ++j) ds = std::max(ds, a.grids.s_nodes[j] - a.grids.s_nodes[j - 1]);
    const double gap = std::abs(rate - quad) / norm2;
    const double c = gap / ds;
    CHECK(rate >= 0.0);
    if (previous_c > 0.0) {
      CHECK(c <= 2.0 * previous_c);
      CHECK(c >= 0.25 * previous_c);
    }
    previous_c = c;
    MESSAGE("n_s=" << n_s << " rate=" << rate << " quad=" << quad << " C=" << c);
  }
}

TEST_CASE("generator reproduces the continuous right-hand side to second order in h") {
  // The cubic ramp is only C1: mu*'' jumps at tau - w and tau, so the exact (mu* zeta_x)_x jumps
  // there and any three-point stencil is O(h) at the adjacent nodes. Second order holds away from
  // the knots and in the h-weighted l1 norm, where those O(1) nodes contribute O(h^2).
  std::vector<double> smooth_max, l1, knot_max;
  for (int n_x : {20, 40, 80}) {
    const auto a = damped(n_x, 12);
    const auto& L = a.layout;
    const auto& p = a.params;
    const auto st = smooth_state(a);
    const ComplexVector AU = a.A * st.pack(L);
    const double h = a.grids.h;
    const double knots[2] = {a.profile.tau - a.profile.ramp_width, a.profile.tau};

    double Z = 0.0;  // zeta profile amplitude with the discrete memory weights
    for (int j = 1; j < L.n_s; ++j) Z -= a.memory_weight[j] * (1.0 - std::exp(-a.grids.s_nodes[j]));

    double e_smooth = 0.0, e_l1 = 0.0, e_knot = 0.0;
    for (int i = 0; i < L.n_x; ++i) {
      const double x = a.grids.x[i];
      const auto mu = eval_damping(a.profile, x);
      const double v_dot = (-p.mu * std::sin(x) + Z * (mu.derivative * std::cos(x) - mu.value * std::sin(x)) +
                            2 * p.gamma * std::cos(2 * x) - 3 * p.beta * std::cos(3 * x)) / p.rho;
      const double varphi_dot = (-4 * p.b * std::sin(2 * x) - 9 * p.m * std::sin(3 * x) - p.xi * std::sin(2 * x) +
                                 p.d * std::sin(3 * x) - p.gamma * std::cos(x)) / p.J;
      const double theta_dot = (-9 * p.k * std::sin(3 * x) - 4 * p.m * std::sin(2 * x) - p.d * std::sin(x) -
                                2 * p.beta * std::cos(2 * x)) / p.a;
      const double err = std::max({std::abs(AU(L.u(i)) - st.v(i)), std::abs(AU(L.phi(i)) - st.varphi(i)),
                                   std::abs(AU(L.psi(i)) - st.theta(i)), std::abs(AU(L.v(i)) - v_dot),
                                   std::abs(AU(L.varphi(i)) - varphi_dot), std::abs(AU(L.theta(i)) - theta_dot)});
      const bool near_knot = std::abs(x - knots[0]) < 2 * h || std::abs(x - knots[1]) < 2 * h;
      (near_knot ? e_knot : e_smooth) = std::max(near_knot ? e_knot : e_smooth, err);
      e_l1 += h * err;
    }
    smooth_max.push_back(e_smooth);
    l1.push_back(e_l1);
    knot_max.push_back(e_knot);
  }
  auto slope = [](const std::vector<double>& e) { return std::log2(e[0] / e[2]) / 2.0; };
  MESSAGE("slopes: away from knots " << slope(smooth_max) << ", l1 " << slope(l1) << ", at knots " << slope(knot_max));
  CHECK(slope(smooth_max) >= 1.9);
  CHECK(slope(l1) >= 1.8);  // 1.89 at this range, still pre-asymptotic
  CHECK(slope(knot_max) >= 0.9);
}

TEST_CASE("unweighted memory norm coincides with the weighted one for a unit indicator profile") {
  const auto k = reference_kernel();
  const auto grids = build_grids(20, 8, k.s_max, 40.0);
  const DampingProfile box{1.0, 1.0, 0.0, ProfileShape::jump};
  DiscretizationOptions unweighted;
  unweighted.memory_weighting = MemoryWeighting::unweighted;
  const auto a = assemble_generator(reference_params(), box, k, grids);
  const auto b = assemble_generator(reference_params(), box, k, grids, unweighted);
  // faces straddling the jump average to 1/2, the only place the two norms differ
  SparseMatrix diff = a.M - b.M;
  diff.prune(0.0);
  int straddling = 0;
  for (double w : a.mu_face) straddling += (w > 0.0 && w < 1.0);
  CHECK(straddling == 1);
  CHECK(diff.nonZeros() > 0);
  CHECK(memory_weighting_from_string("unweighted") == MemoryWeighting::unweighted);
  CHECK_THROWS_AS(memory_weighting_from_string("none"), ValidationError);
}

TEST_CASE("assembly rejects a memory grid that does not span the kernel support") {
  const auto k = reference_kernel();
  CHECK_THROWS_AS(assemble_generator(reference_params(), damped_profile(), k, build_grids(10, 8, 5.0, 40.0)),
                  ValidationError);
  auto bad = reference_params();
  bad.beta = 0.0;
  CHECK_THROWS_AS(assemble_generator(bad, damped_profile(), k, build_grids(10, 8, k.s_max, 40.0)), ValidationError);
}
