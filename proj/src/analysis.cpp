// SPDX-License-Identifier: Apache-2.0
#include "ptl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ptl {

DecayFit decay_fit(const std::vector<double>& times, const std::vector<double>& norms, double graph_norm,
                   DecayWindow window) {
  if (times.size() != norms.size() || times.empty()) throw ValidationError("trace times and norms must match");
  if (!(graph_norm > 0.0)) throw ValidationError("graph norm must be positive");
  const double t_hi = window.t_hi > 0.0 ? window.t_hi : times.back() / 3.0;
  if (window.t_lo < 1.0) throw ValidationError("decay window must start at t >= 1");
  if (!(t_hi > window.t_lo)) throw ValidationError("decay window is empty");
  if (window.t_lo < times.front() || t_hi > times.back() * (1 + 1e-12)) {
    std::ostringstream os;
    os << "decay window [" << window.t_lo << ", " << t_hi << "] lies outside the trace [" << times.front() << ", "
       << times.back() << "]";
    throw ValidationError(os.str());
  }

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.t_lo || times[i] > t_hi) continue;
    if (!(norms[i] > 0.0)) throw ValidationError("norms must be positive inside the decay window");
    lx.push_back(std::log(times[i]));
    ly.push_back(std::log(norms[i] / graph_norm));
  }
  const int n = static_cast<int>(lx.size());
  if (n < 20) throw ValidationError("decay window holds " + std::to_string(n) + " samples, need at least 20");

  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  const double slope = sxy / sxx;

  DecayFit fit;
  fit.t_lo = window.t_lo;
  fit.t_hi = t_hi;
  fit.alpha = -slope;
  fit.log_constant = my - slope * mx;
  fit.samples = n;
  double ss_res = 0;
  fit.residuals.resize(n);
  for (int i = 0; i < n; ++i) {
    fit.residuals[i] = ly[i] - (fit.log_constant + slope * lx[i]);
    ss_res += fit.residuals[i] * fit.residuals[i];
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

DecayFit decay_fit(const SimulationTrace& trace, DecayWindow window) {
  return decay_fit(trace.times, trace.norms, trace.initial_graph_norm, window);
}

EnergyBudget energy_budget(const SimulationTrace& trace) {
  const auto& t = trace.times;
  if (t.empty() || trace.energies.size() != t.size() || trace.dissipation_rates.size() != t.size())
    throw ValidationError("trace needs energies and dissipation rates at every time");
  EnergyBudget b;
  b.drop = trace.energies.front() - trace.energies.back();
  for (std::size_t i = 1; i < t.size(); ++i)
    b.integrated_dissipation += 0.5 * (t[i] - t[i - 1]) * (trace.dissipation_rates[i] + trace.dissipation_rates[i - 1]);
  const double E0 = trace.energies.front();
  b.relative_gap = E0 > 0.0 ? std::abs(b.drop - b.integrated_dissipation) / E0 : 0.0;
  return b;
}

}  // namespace ptl
