// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "ptl/errors.hpp"

namespace ptl {

/// Material constants of the porous thermoelastic rod on [0, pi].
struct PhysicalParams {
  double rho{1.0};
  double mu{2.0};
  double gamma{1.0};
  double beta{1.0};
  double J{1.0};
  double b{2.0};
  double m{1.0};
  double xi{1.0};
  double d{1.0};
  double a{1.0};
  double k{2.0};
};

/// Every violated admissibility constraint, by name. Empty means admissible.
std::vector<std::string> param_violations(const PhysicalParams& raw);

/// Returns `raw` unchanged when admissible, throws ValidationError listing all violations otherwise.
PhysicalParams validate_params(const PhysicalParams& raw);

enum class ProfileShape { jump, smooth_ramp, off };

std::string to_string(ProfileShape shape);
ProfileShape profile_shape_from_string(const std::string& name);

/// Localized memory coefficient mu*(x): plateau mu0 near x = 0, zero beyond tau.
/// `off` models the undamped rod (mu* identically zero).
struct DampingProfile {
  double mu0{1.0};
  double tau{1.5707963267948966};
  double ramp_width{0.2};
  ProfileShape shape{ProfileShape::smooth_ramp};
};

void validate_profile(const DampingProfile& profile);

struct DampingValue {
  double value;
  double derivative;
};

/// mu*(x) and d mu*/dx. The smooth ramp is the C1 cubic 1 - 3t^2 + 2t^3 on [tau - w, tau].
DampingValue eval_damping(const DampingProfile& profile, double x);

struct KernelTerm {
  double amplitude;
  double rate;
};

/// g(s) = sum_i amplitude_i * exp(-rate_i * s), truncated at s_max.
struct MemoryKernel {
  std::vector<KernelTerm> terms;
  double s_max{0.0};
  double tail_tol{1e-8};

  double g(double s) const;
  double g_s(double s) const;
  double g_ss(double s) const;
  /// Exact integral of -g_s over [lo, hi], i.e. g(lo) - g(hi).
  double mass(double lo, double hi) const { return g(lo) - g(hi); }
};

/// Builds a kernel and, when s_max <= 0, picks the smallest horizon with g(s_max) <= tail_tol * g(0).
MemoryKernel make_kernel(std::vector<KernelTerm> terms, double tail_tol = 1e-8, double s_max = 0.0);

void validate_kernel(const MemoryKernel& kernel);

struct Grids {
  int n_x{0};
  double h{0.0};
  std::vector<double> x;  // interior nodes, x_i = (i + 1) h
  std::vector<double> s_nodes;
  std::vector<double> s_weights;
  double grading_ratio{1.0};

  int n_s() const { return static_cast<int>(s_nodes.size()); }
  double s_max() const { return s_nodes.back(); }
};

/// Uniform spatial grid with Dirichlet ends and a geometrically graded memory grid on [0, s_max].
Grids build_grids(int n_x, int n_s, double s_max, double grading_ratio);

/// Interpolatory weights on arbitrary increasing nodes: each interval integrates the local
/// Lagrange interpolant through up to six neighbouring nodes.
std::vector<double> quadrature_weights(std::span<const double> nodes);

constexpr double kPi = 3.14159265358979323846;

}  // namespace ptl
