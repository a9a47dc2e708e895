// SPDX-License-Identifier: Apache-2.0
#include "ptl/kernel_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ptl {

KernelValues kernel_eval(const MemoryKernel& kernel, double s) {
  if (!(s >= 0.0)) throw ValidationError("kernel evaluated at negative s");
  return {kernel.g(s), kernel.g_s(s), kernel.g_ss(s)};
}

std::vector<double> log_space(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi >= lo) || n < 1) throw ValidationError("log_space needs 0 < lo <= hi and n >= 1");
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

double convexity_ratio(const MemoryKernel& kernel, double s) { return kernel.g_ss(s) / -kernel.g_s(s); }

double golden_max(const MemoryKernel& kernel, double lo, double hi) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = convexity_ratio(kernel, x1);
  double f2 = convexity_ratio(kernel, x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = convexity_ratio(kernel, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = convexity_ratio(kernel, x1);
    }
  }
  return 0.5 * (lo + hi);
}

// Smallest s with -g_s(s) <= fraction * (-g_s(0)), capped at s_max.
double support_extent(const MemoryKernel& kernel, double fraction) {
  const double target = -fraction * kernel.g_s(0.0);
  if (-kernel.g_s(kernel.s_max) > target) return kernel.s_max;
  double lo = 0.0;
  double hi = kernel.s_max;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (-kernel.g_s(mid) <= target ? hi : lo) = mid;
  }
  return hi;
}

}  // namespace

KernelCertificate certify_h1_h2(const MemoryKernel& kernel) {
  validate_kernel(kernel);
  KernelCertificate cert;

  constexpr int scan_points = 10000;
  std::vector<double> scan = log_space(kernel.s_max * 1e-8, kernel.s_max, scan_points - 1);
  scan.insert(scan.begin(), 0.0);

  std::size_t best = 0;
  double best_ratio = -std::numeric_limits<double>::infinity();
  double worst_ratio = std::numeric_limits<double>::infinity();
  bool g_pos = true, gs_neg = true, gss_pos = true;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    const auto v = kernel_eval(kernel, scan[i]);
    g_pos = g_pos && v.g > 0.0;
    gs_neg = gs_neg && v.g_s < 0.0;
    gss_pos = gss_pos && v.g_ss > 0.0;
    const double r = v.g_ss / -v.g_s;
    worst_ratio = std::min(worst_ratio, r);
    if (r > best_ratio) {
      best_ratio = r;
      best = i;
    }
  }
  if (!g_pos) cert.failures.emplace_back("g(s) > 0 fails");
  if (!gs_neg) cert.failures.emplace_back("g_s(s) < 0 fails");
  if (!gss_pos) cert.failures.emplace_back("g_ss(s) > 0 fails");
  cert.h1_ok = cert.failures.empty();

  const double lo = best == 0 ? 0.0 : scan[best - 1];
  const double hi = best + 1 < scan.size() ? scan[best + 1] : scan[best];
  double s_star = scan[best];
  if (hi > lo) {
    const double refined = golden_max(kernel, lo, hi);
    if (convexity_ratio(kernel, refined) > best_ratio) s_star = refined;
  }
  cert.ratio_sup_at = s_star;
  cert.ratio_sup = convexity_ratio(kernel, s_star);

  double slowest = std::numeric_limits<double>::infinity();
  for (const auto& t : kernel.terms) slowest = std::min(slowest, t.rate);
  cert.K_h2 = std::min(worst_ratio, slowest);
  cert.h2_ok = cert.K_h2 > 0.0 && std::isfinite(cert.K_h2);
  if (!cert.h2_ok) cert.failures.emplace_back("no K > 0 satisfies g_ss + K g_s >= 0");
  return cert;
}

namespace {

using GridCache = std::map<int, Grids>;

// Keep the graded family but double the node count until every interval inside the
// kernel's support resolves the oscillation. Refined grids are memoized by node count.
const Grids& oscillation_grid(const MemoryKernel& kernel, double omega, const Grids& grids, int nodes_per_period,
                              GridCache& cache) {
  if (omega == 0.0) return grids;
  const double target = 2.0 * kPi / (omega * nodes_per_period);
  const double extent = support_extent(kernel, 1e-10);
  auto too_coarse = [&](const Grids& g) {
    for (std::size_t j = 0; j + 1 < g.s_nodes.size() && g.s_nodes[j] < extent; ++j)
      if (g.s_nodes[j + 1] - g.s_nodes[j] > target) return true;
    return false;
  };
  const Grids* active = &grids;
  int n_s = grids.n_s();
  while (too_coarse(*active)) {
    if (n_s > (1 << 22)) throw NumericalError("oscillatory quadrature needs more than 4M memory nodes");
    n_s = 2 * n_s - 1;
    auto it = cache.find(n_s);
    if (it == cache.end())
      it = cache.emplace(n_s, build_grids(grids.n_x, n_s, grids.s_max(), grids.grading_ratio)).first;
    active = &it->second;
  }
  return *active;
}

double integrate(const MemoryKernel& kernel, double lambda, const Grids& g) {
  double sum = 0.0;
  for (int j = 0; j < g.n_s(); ++j) {
    const double s = g.s_nodes[j];
    const double half = std::sin(0.5 * lambda * s);
    // |1 - e^{-i lambda s}|^2 = 4 sin^2(lambda s / 2)
    sum += g.s_weights[j] * (-kernel.g_s(s)) * 4.0 * half * half;
  }
  return sum;
}

}  // namespace

double frequency_integral(const MemoryKernel& kernel, double lambda, const Grids& grids, int nodes_per_period,
                          int* nodes_used) {
  if (nodes_per_period < 10) throw ValidationError("nodes_per_period must be at least 10");
  GridCache cache;
  const Grids& g = oscillation_grid(kernel, std::abs(lambda), grids, nodes_per_period, cache);
  if (nodes_used) *nodes_used = g.n_s();
  return integrate(kernel, lambda, g);
}

double delta_lower_bound(const MemoryKernel& kernel, double epsilon, std::span<const double> lambda_grid,
                         const Grids& grids, int* max_nodes_used) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive: the bound degenerates as lambda -> 0");
  if (lambda_grid.empty()) throw ValidationError("lambda grid is empty");
  for (double l : lambda_grid)
    if (!(std::abs(l) >= epsilon * (1.0 - 1e-12))) throw ValidationError("lambda grid has points below epsilon");

  double best = std::numeric_limits<double>::infinity();
  int most_nodes = 0;
  GridCache cache;
  for (double l : lambda_grid) {
    const Grids& g = oscillation_grid(kernel, std::abs(l), grids, 16, cache);
    best = std::min(best, integrate(kernel, l, g));
    most_nodes = std::max(most_nodes, g.n_s());
  }
  if (max_nodes_used) *max_nodes_used = most_nodes;
  return best;
}

KernelCertificate certify_kernel(const MemoryKernel& kernel, const Grids& grids, double epsilon, double lambda_max,
                                 int lambda_points) {
  auto cert = certify_h1_h2(kernel);
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive: the bound degenerates as lambda -> 0");
  if (!(lambda_max >= epsilon)) throw ValidationError("lambda_max must be >= epsilon");
  const auto grid = log_space(epsilon, lambda_max, lambda_points);
  cert.epsilon = epsilon;
  cert.lambda_max = lambda_max;
  cert.lambda_points = lambda_points;
  cert.delta = delta_lower_bound(kernel, epsilon, grid, grids, &cert.max_nodes_used);
  cert.tail_bound = 4.0 * kernel.g(kernel.s_max);
  return cert;
}

}  // namespace ptl
