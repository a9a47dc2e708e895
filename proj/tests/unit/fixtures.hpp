// SPDX-License-Identifier: Apache-2.0
// Shared test setups: the reference material constants and the damped / conservative presets.
#pragma once

#include <cmath>
#include <random>

#include "ptl/discretize.hpp"

namespace ptl::testing {

inline PhysicalParams reference_params() { return {1, 2, 1, 1, 1, 2, 1, 1, 1, 1, 2}; }

inline DampingProfile damped_profile() { return {1.0, kPi / 2, 0.2, ProfileShape::smooth_ramp}; }
inline DampingProfile conservative_profile() { return {1.0, kPi / 2, 0.2, ProfileShape::off}; }

inline MemoryKernel reference_kernel() { return make_kernel({{1.0, 1.0}}, 1e-8); }

inline GeneratorAssembly assemble(const DampingProfile& profile, int n_x, int n_s, const MemoryKernel& kernel,
                                  double ratio = 40.0, const PhysicalParams& params = reference_params(),
                                  const DiscretizationOptions& options = {}) {
  return assemble_generator(params, profile, kernel, build_grids(n_x, n_s, kernel.s_max, ratio), options);
}

inline GeneratorAssembly damped(int n_x = 40, int n_s = 16) {
  return assemble(damped_profile(), n_x, n_s, reference_kernel());
}

inline GeneratorAssembly conservative(int n_x = 40, int n_s = 16) {
  return assemble(conservative_profile(), n_x, n_s, reference_kernel());
}

inline ComplexVector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  ComplexVector u(n);
  for (int i = 0; i < n; ++i) u(i) = {z(rng), z(rng)};
  return u;
}

}  // namespace ptl::testing
