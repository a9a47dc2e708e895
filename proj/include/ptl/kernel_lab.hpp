// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "ptl/model.hpp"

namespace ptl {

struct KernelValues {
  double g;
  double g_s;
  double g_ss;
};

/// Closed-form (g, g_s, g_ss) at s >= 0.
KernelValues kernel_eval(const MemoryKernel& kernel, double s);

struct KernelCertificate {
  bool h1_ok{false};
  bool h2_ok{false};
  std::vector<std::string> failures;
  // g_ss + K g_s >= 0 holds exactly for K <= inf_s g_ss / (-g_s); K_h2 is that infimum.
  double K_h2{0.0};
  double ratio_sup{0.0};     // sup_s g_ss / (-g_s) over [0, s_max]
  double ratio_sup_at{0.0};  // where the sup is attained
  double epsilon{0.0};
  double delta{0.0};
  // quadrature metadata for the delta evaluation
  double lambda_max{0.0};
  int lambda_points{0};
  int max_nodes_used{0};
  double tail_bound{0.0};  // bound on the neglected integral beyond s_max: 4 g(s_max)
};

/// Checks the sign conditions of g, g_s, g_ss on a dense scan of [0, s_max] and brackets the
/// convexity ratio g_ss / (-g_s): its supremum by scan plus golden-section refinement, and its
/// infimum K_h2, the largest K with g_ss + K g_s >= 0. For exponential sums the ratio is a
/// weighted mean of the rates, so the infimum is the slowest rate, approached as s -> inf.
/// delta is left at zero.
KernelCertificate certify_h1_h2(const MemoryKernel& kernel);

/// Quadrature of |g_s(s)| |1 - exp(-i lambda s)|^2 over [0, s_max]. The base grid is refined
/// until every interval inside the kernel's support holds at least `nodes_per_period` nodes
/// per oscillation period. `nodes_used` receives the final node count.
double frequency_integral(const MemoryKernel& kernel, double lambda, const Grids& grids,
                          int nodes_per_period = 16, int* nodes_used = nullptr);

/// Minimum of frequency_integral over lambda_grid, all of whose points must be >= epsilon > 0.
double delta_lower_bound(const MemoryKernel& kernel, double epsilon, std::span<const double> lambda_grid,
                         const Grids& grids, int* max_nodes_used = nullptr);

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_space(double lo, double hi, int n);

/// Full certificate: sign and convexity checks plus delta over [epsilon, lambda_max].
KernelCertificate certify_kernel(const MemoryKernel& kernel, const Grids& grids, double epsilon,
                                 double lambda_max, int lambda_points);

}  // namespace ptl
