// SPDX-License-Identifier: Apache-2.0
#include "ptl/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ptl {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) os << "; ";
    os << items[i];
  }
  return os.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::invalid_argument(join(violations)), violations_(std::move(violations)) {}

std::vector<std::string> param_violations(const PhysicalParams& p) {
  std::vector<std::string> out;
  auto positive = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be positive");
  };
  positive(p.rho, "rho");
  positive(p.mu, "mu");
  positive(p.gamma, "gamma");
  if (!(p.beta != 0.0) || !std::isfinite(p.beta)) out.emplace_back("beta must be nonzero");
  positive(p.J, "J");
  positive(p.b, "b");
  if (!(p.m != 0.0) || !std::isfinite(p.m)) out.emplace_back("m must be nonzero");
  positive(p.xi, "xi");
  positive(p.d, "d");
  positive(p.a, "a");
  positive(p.k, "k");
  if (!(p.mu * p.xi > p.gamma * p.gamma)) out.emplace_back("mu*xi <= gamma^2");
  if (!(p.b * p.k > p.m * p.m)) out.emplace_back("b*k <= m^2");
  return out;
}

PhysicalParams validate_params(const PhysicalParams& raw) {
  auto violations = param_violations(raw);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  return raw;
}

std::string to_string(ProfileShape shape) {
  switch (shape) {
    case ProfileShape::jump: return "jump";
    case ProfileShape::smooth_ramp: return "smooth_ramp";
    case ProfileShape::off: return "off";
  }
  return "unknown";
}

ProfileShape profile_shape_from_string(const std::string& name) {
  if (name == "jump") return ProfileShape::jump;
  if (name == "smooth_ramp") return ProfileShape::smooth_ramp;
  if (name == "off") return ProfileShape::off;
  throw ValidationError("profile.shape must be one of jump, smooth_ramp, off (got '" + name + "')");
}

void validate_profile(const DampingProfile& profile) {
  std::vector<std::string> out;
  if (!(profile.mu0 > 0.0)) out.emplace_back("mu0 must be positive");
  if (!(profile.tau > 0.0 && profile.tau < kPi)) out.emplace_back("tau must lie in (0, pi)");
  if (!(profile.ramp_width >= 0.0)) out.emplace_back("ramp_width must be non-negative");
  if (profile.shape == ProfileShape::smooth_ramp) {
    if (!(profile.ramp_width > 0.0)) out.emplace_back("smooth_ramp needs ramp_width > 0");
    if (!(profile.ramp_width < profile.tau)) out.emplace_back("ramp_width must be smaller than tau");
  }
  if (!out.empty()) throw ValidationError(std::move(out));
}

DampingValue eval_damping(const DampingProfile& profile, double x) {
  if (!(x >= 0.0 && x <= kPi)) throw ValidationError("damping evaluated outside [0, pi]");
  switch (profile.shape) {
    case ProfileShape::off: return {0.0, 0.0};
    case ProfileShape::jump: return {x < profile.tau ? profile.mu0 : 0.0, 0.0};
    case ProfileShape::smooth_ramp: {
      const double start = profile.tau - profile.ramp_width;
      if (x <= start) return {profile.mu0, 0.0};
      if (x >= profile.tau) return {0.0, 0.0};
      const double t = (x - start) / profile.ramp_width;
      return {profile.mu0 * (1.0 - 3.0 * t * t + 2.0 * t * t * t),
              profile.mu0 * (-6.0 * t + 6.0 * t * t) / profile.ramp_width};
    }
  }
  return {0.0, 0.0};
}

double MemoryKernel::g(double s) const {
  double sum = 0.0;
  for (const auto& t : terms) sum += t.amplitude * std::exp(-t.rate * s);
  return sum;
}

double MemoryKernel::g_s(double s) const {
  double sum = 0.0;
  for (const auto& t : terms) sum -= t.amplitude * t.rate * std::exp(-t.rate * s);
  return sum;
}

double MemoryKernel::g_ss(double s) const {
  double sum = 0.0;
  for (const auto& t : terms) sum += t.amplitude * t.rate * t.rate * std::exp(-t.rate * s);
  return sum;
}

void validate_kernel(const MemoryKernel& kernel) {
  std::vector<std::string> out;
  if (kernel.terms.empty()) out.emplace_back("kernel needs at least one term");
  for (const auto& t : kernel.terms) {
    if (!(t.amplitude > 0.0 && std::isfinite(t.amplitude))) out.emplace_back("kernel amplitude must be positive");
    if (!(t.rate > 0.0 && std::isfinite(t.rate))) out.emplace_back("kernel rate must be positive");
  }
  if (!(kernel.tail_tol > 0.0 && kernel.tail_tol < 1.0)) out.emplace_back("tail_tol must lie in (0, 1)");
  if (!(kernel.s_max > 0.0)) out.emplace_back("s_max must be positive");
  if (out.empty() && kernel.g(kernel.s_max) > kernel.tail_tol * kernel.g(0.0) * (1.0 + 1e-12))
    out.emplace_back("g(s_max) exceeds tail_tol * g(0)");
  if (!out.empty()) throw ValidationError(std::move(out));
}

MemoryKernel make_kernel(std::vector<KernelTerm> terms, double tail_tol, double s_max) {
  MemoryKernel kernel{std::move(terms), s_max, tail_tol};
  if (s_max <= 0.0) {
    kernel.s_max = 1.0;  // placeholder so validation reports term errors first
    std::vector<std::string> out;
    for (const auto& t : kernel.terms)
      if (!(t.amplitude > 0.0) || !(t.rate > 0.0)) out.emplace_back("kernel terms need positive amplitude and rate");
    if (kernel.terms.empty()) out.emplace_back("kernel needs at least one term");
    if (!(tail_tol > 0.0 && tail_tol < 1.0)) out.emplace_back("tail_tol must lie in (0, 1)");
    if (!out.empty()) throw ValidationError(std::move(out));

    double slowest = kernel.terms.front().rate;
    for (const auto& t : kernel.terms) slowest = std::min(slowest, t.rate);
    const double target = tail_tol * kernel.g(0.0);
    double lo = 0.0;
    double hi = std::log(1.0 / tail_tol) / slowest;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (kernel.g(mid) <= target ? hi : lo) = mid;
    }
    kernel.s_max = hi;
  }
  validate_kernel(kernel);
  return kernel;
}

namespace {

std::vector<double> interpolatory_weights(std::span<const double> nodes, int q) {
  const int n = static_cast<int>(nodes.size());
  std::vector<double> w(nodes.size(), 0.0);
  for (int j = 0; j + 1 < n; ++j) {
    const double width = nodes[j + 1] - nodes[j];
    const int start = std::clamp(j - (q / 2 - 1), 0, n - q);
    Eigen::MatrixXd vander(q, q);
    Eigen::VectorXd moments(q);
    for (int r = 0; r < q; ++r) {
      moments(r) = 1.0 / (r + 1);
      for (int c = 0; c < q; ++c) vander(r, c) = std::pow((nodes[start + c] - nodes[j]) / width, r);
    }
    const Eigen::VectorXd local = vander.partialPivLu().solve(moments);
    for (int c = 0; c < q; ++c) w[start + c] += width * local(c);
  }
  return w;
}

}  // namespace

std::vector<double> quadrature_weights(std::span<const double> nodes) {
  const int n = static_cast<int>(nodes.size());
  if (n < 2) return std::vector<double>(nodes.size(), 0.0);
  // Strongly stretched stencils can produce negative weights; drop the degree until they vanish.
  for (int q = std::min(6, n); q > 2; --q) {
    auto w = interpolatory_weights(nodes, q);
    if (std::all_of(w.begin(), w.end(), [](double v) { return v > 0.0; })) return w;
  }
  return interpolatory_weights(nodes, 2);
}

Grids build_grids(int n_x, int n_s, double s_max, double grading_ratio) {
  std::vector<std::string> out;
  if (n_x < 3) out.emplace_back("n_x must be at least 3");
  if (n_s < 2) out.emplace_back("n_s must be at least 2");
  if (!(s_max > 0.0)) out.emplace_back("s_max must be positive");
  if (!(grading_ratio >= 1.0)) out.emplace_back("grading_ratio must be >= 1");
  if (!out.empty()) throw ValidationError(std::move(out));

  Grids grids;
  grids.n_x = n_x;
  grids.h = kPi / (n_x + 1);
  grids.x.resize(n_x);
  for (int i = 0; i < n_x; ++i) grids.x[i] = (i + 1) * grids.h;

  const int intervals = n_s - 1;
  grids.s_nodes.resize(n_s);
  grids.s_nodes[0] = 0.0;
  if (grading_ratio == 1.0 || intervals == 1) {
    for (int j = 1; j < n_s; ++j) grids.s_nodes[j] = s_max * j / intervals;
  } else {
    // grading_ratio is the ratio of the last to the first spacing
    const double step_ratio = intervals > 1 ? std::pow(grading_ratio, 1.0 / (intervals - 1)) : 1.0;
    const double first = intervals > 1 ? s_max * (step_ratio - 1.0) / (std::pow(step_ratio, intervals) - 1.0)
                                       : s_max;
    double step = first;
    for (int j = 1; j < n_s; ++j) {
      grids.s_nodes[j] = grids.s_nodes[j - 1] + step;
      step *= step_ratio;
    }
  }
  grids.s_nodes.back() = s_max;
  grids.s_weights = quadrature_weights(grids.s_nodes);
  grids.grading_ratio = grading_ratio;
  return grids;
}

}  // namespace ptl
