// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ptl/evolve.hpp"

namespace ptl {

struct DecayWindow {
  double t_lo{1.0};
  double t_hi{0.0};  // <= 0 selects T/3
};

struct DecayFit {
  double t_lo{0.0};
  double t_hi{0.0};
  double alpha{0.0};      // ||U(t)||_M / graph_norm(U0) ~ C t^{-alpha}
  double log_constant{0.0};
  double r_squared{0.0};
  int samples{0};
  std::vector<double> residuals;  // log-space residual per sample in the window
};

inline constexpr double kReferenceDecayRate = 0.625;

/// Least-squares line through (log t, log(norm / graph_norm)) over the window. Needs t_lo >= 1,
/// the window inside the trace, at least 20 samples and positive norms.
DecayFit decay_fit(const std::vector<double>& times, const std::vector<double>& norms, double graph_norm,
                   DecayWindow window);

DecayFit decay_fit(const SimulationTrace& trace, DecayWindow window);

struct EnergyBudget {
  double drop{0.0};                    // E(0) - E(T)
  double integrated_dissipation{0.0};  // trapezoid of the recorded loss rates
  double relative_gap{0.0};            // |drop - integral| / E(0)
};

EnergyBudget energy_budget(const SimulationTrace& trace);

}  // namespace ptl
