// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "ptl/model.hpp"

using namespace ptl;

namespace {

PhysicalParams reference_params() { return {1, 2, 1, 1, 1, 2, 1, 1, 1, 1, 2}; }

bool contains(const std::vector<std::string>& v, const std::string& needle) {
  return std::find(v.begin(), v.end(), needle) != v.end();
}

}  // namespace

TEST_CASE("validate_params accepts the reference set") {
  CHECK(param_violations(reference_params()).empty());
  CHECK_NOTHROW(validate_params(reference_params()));
}

TEST_CASE("validate_params names each violated constraint") {
  auto p = reference_params();
  p.mu = 1.0;
  p.xi = 1.0;
  p.gamma = 1.0;
  CHECK(contains(param_violations(p), "mu*xi <= gamma^2"));

  p = reference_params();
  p.beta = 0.0;
  try {
    validate_params(p);
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(contains(e.violations(), "beta must be nonzero"));
  }

  p = reference_params();
  p.b = 0.5;  // b*k = 1 = m^2
  CHECK(contains(param_violations(p), "b*k <= m^2"));

  p = reference_params();
  p.m = 0.0;
  p.rho = -1.0;
  const auto v = param_violations(p);
  CHECK(contains(v, "m must be nonzero"));
  CHECK(contains(v, "rho must be positive"));
}

TEST_CASE("crossing any single constraint boundary flips acceptance") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    PhysicalParams p{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    p.gamma = std::sqrt(p.mu * p.xi) * 0.9;
    p.m = std::sqrt(p.b * p.k) * 0.9;
    REQUIRE(param_violations(p).empty());

    auto q = p;
    q.gamma = std::sqrt(p.mu * p.xi) * 1.0001;
    CHECK(param_violations(q) == std::vector<std::string>{"mu*xi <= gamma^2"});
    q = p;
    q.m = -std::sqrt(p.b * p.k) * 1.0001;
    CHECK(param_violations(q) == std::vector<std::string>{"b*k <= m^2"});
    q = p;
    q.d = -q.d;
    CHECK(param_violations(q) == std::vector<std::string>{"d must be positive"});
    q = p;
    q.beta = -q.beta;  // only nonzero is required
    CHECK(param_violations(q).empty());
  }
}

TEST_CASE("eval_damping plateau, exterior and ramp midpoint") {
  DampingProfile jump{1.0, kPi / 2, 0.0, ProfileShape::jump};
  auto v = eval_damping(jump, kPi / 4);
  CHECK(v.value == 1.0);
  CHECK(v.derivative == 0.0);

  DampingProfile ramp{1.0, kPi / 2, 0.2, ProfileShape::smooth_ramp};
  for (const auto& prof : {jump, ramp}) {
    auto out = eval_damping(prof, 3 * kPi / 4);
    CHECK(out.value == 0.0);
    CHECK(out.derivative == 0.0);
  }

  // cubic blend 1 - 3t^2 + 2t^3 at t = 1/2: value 1/2, slope (-6t + 6t^2)/w = -1.5/0.2
  auto mid = eval_damping(ramp, kPi / 2 - 0.1);
  CHECK(mid.value == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mid.derivative == doctest::Approx(-7.5).epsilon(1e-12));

  CHECK_THROWS_AS(eval_damping(ramp, -0.1), ValidationError);
  CHECK_THROWS_AS(eval_damping(ramp, 3.2), ValidationError);
}

TEST_CASE("smooth ramp is non-negative and C1 at both ends of the blend") {
  DampingProfile ramp{1.3, 1.2, 0.3, ProfileShape::smooth_ramp};
  for (int i = 0; i <= 2000; ++i) {
    const double x = kPi * i / 2000;
    const auto v = eval_damping(ramp, x);
    CHECK(v.value >= 0.0);
    if (x < ramp.tau - ramp.ramp_width) CHECK(v.value >= ramp.mu0);
    if (x > ramp.tau) CHECK(v.value == 0.0);
  }
  const double eps = 1e-8;
  for (double knot : {ramp.tau - ramp.ramp_width, ramp.tau}) {
    const double left = (eval_damping(ramp, knot).value - eval_damping(ramp, knot - eps).value) / eps;
    const double right = (eval_damping(ramp, knot + eps).value - eval_damping(ramp, knot).value) / eps;
    CHECK(std::abs(left - right) <= 1e-6);
    CHECK(std::abs(eval_damping(ramp, knot).derivative) <= 1e-12);
  }
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(validate_profile({0.0, 1.0, 0.1, ProfileShape::jump}), ValidationError);
  CHECK_THROWS_AS(validate_profile({1.0, 3.5, 0.1, ProfileShape::jump}), ValidationError);
  CHECK_THROWS_AS(validate_profile({1.0, 1.0, 0.0, ProfileShape::smooth_ramp}), ValidationError);
  CHECK_THROWS_AS(validate_profile({1.0, 1.0, 1.5, ProfileShape::smooth_ramp}), ValidationError);
  CHECK_NOTHROW(validate_profile({1.0, 1.0, 0.2, ProfileShape::smooth_ramp}));
  CHECK(profile_shape_from_string("jump") == ProfileShape::jump);
  CHECK_THROWS_AS(profile_shape_from_string("box"), ValidationError);
}

TEST_CASE("make_kernel picks the truncation horizon from tail_tol") {
  auto k = make_kernel({{1.0, 2.0}}, 1e-8);
  CHECK(k.g(k.s_max) <= 1e-8 * k.g(0.0) * (1 + 1e-12));
  CHECK(k.s_max == doctest::Approx(std::log(1e8) / 2.0).epsilon(1e-10));
  CHECK_THROWS_AS(make_kernel({{-1.0, 2.0}}), ValidationError);
  CHECK_THROWS_AS(make_kernel({}), ValidationError);
  CHECK_THROWS_AS(make_kernel({{1.0, 1.0}}, 1e-8, 5.0), ValidationError);  // explicit horizon too short
}

TEST_CASE("build_grids uniform construction") {
  auto g = build_grids(3, 2, 1.0, 1.0);
  REQUIRE(g.x.size() == 3);
  CHECK(g.x[0] == doctest::Approx(kPi / 4));
  CHECK(g.x[1] == doctest::Approx(kPi / 2));
  CHECK(g.x[2] == doctest::Approx(3 * kPi / 4));
  REQUIRE(g.s_nodes.size() == 2);
  CHECK(g.s_nodes[0] == 0.0);
  CHECK(g.s_nodes[1] == 1.0);
  CHECK_THROWS_AS(build_grids(2, 8, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_grids(5, 1, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_grids(5, 4, 0.0, 1.0), ValidationError);
}

TEST_CASE("graded memory grid: positive weights, clustering at s = 0") {
  auto g = build_grids(10, 64, 20.0, 40.0);
  CHECK(g.s_nodes.front() == 0.0);
  CHECK(g.s_nodes.back() == 20.0);
  for (std::size_t j = 1; j < g.s_nodes.size(); ++j) CHECK(g.s_nodes[j] > g.s_nodes[j - 1]);
  CHECK(g.s_nodes[1] - g.s_nodes[0] < g.s_nodes.back() - g.s_nodes[g.s_nodes.size() - 2]);
  for (double w : g.s_weights) CHECK(w > 0.0);

  // -g_s for g = e^{-s} integrates to 1 - e^{-20}
  double sum = 0.0;
  for (int j = 0; j < g.n_s(); ++j) sum += g.s_weights[j] * std::exp(-g.s_nodes[j]);
  CHECK(std::abs(sum - (1.0 - std::exp(-20.0))) / (1.0 - std::exp(-20.0)) <= 1e-6);
}

TEST_CASE("graded quadrature integrates single exponentials with rate in [0.5, 5]") {
  auto g = build_grids(10, 64, 20.0, 40.0);
  for (int i = 0; i <= 20; ++i) {
    const double kappa = 0.5 + 4.5 * i / 20.0;
    double sum = 0.0;
    for (int j = 0; j < g.n_s(); ++j) sum += g.s_weights[j] * std::exp(-kappa * g.s_nodes[j]);
    const double exact = (1.0 - std::exp(-kappa * 20.0)) / kappa;
    CHECK(std::abs(sum - exact) / exact <= 1e-5);
  }
}

TEST_CASE("stretched short grids fall back to lower degree but keep positive weights") {
  for (int n_s : {3, 5, 8, 16}) {
    auto g = build_grids(4, n_s, 18.0, 200.0);
    for (double w : g.s_weights) CHECK(w > 0.0);
    double total = 0.0;
    for (double w : g.s_weights) total += w;
    CHECK(total == doctest::Approx(18.0).epsilon(1e-12));
  }
}
