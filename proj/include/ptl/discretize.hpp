// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <string>
#include <vector>

#include "ptl/model.hpp"

namespace ptl {

using SparseMatrix = Eigen::SparseMatrix<double>;
using ComplexVector = Eigen::VectorXcd;

enum class MemoryWeighting { mu_star, unweighted };

std::string to_string(MemoryWeighting weighting);
MemoryWeighting memory_weighting_from_string(const std::string& name);

struct DiscretizationOptions {
  MemoryWeighting memory_weighting{MemoryWeighting::mu_star};
  double support_threshold{1e-12};  // faces with averaged mu* at or below this carry no memory
};

/// Degree-of-freedom map. Blocks are stored as u, v, phi, varphi, psi, theta (n_x each)
/// followed by eta at (eta node, memory node j >= 1), memory index fastest.
struct StateLayout {
  int n_x{0};
  int n_s{0};                  // memory nodes including s = 0
  std::vector<int> eta_nodes;  // spatial node index of each eta row

  int n_eta_x() const { return static_cast<int>(eta_nodes.size()); }
  int n_mem() const { return n_s - 1; }
  int size() const { return 6 * n_x + n_eta_x() * n_mem(); }

  int u(int i) const { return i; }
  int v(int i) const { return n_x + i; }
  int phi(int i) const { return 2 * n_x + i; }
  int varphi(int i) const { return 3 * n_x + i; }
  int psi(int i) const { return 4 * n_x + i; }
  int theta(int i) const { return 5 * n_x + i; }
  /// eta at local eta row r and memory node j in [1, n_s).
  int eta(int r, int j) const { return 6 * n_x + r * n_mem() + (j - 1); }
};

/// Nodal fields of one state. eta has n_s columns; column 0 (s = 0) is pinned to zero.
struct DiscreteState {
  ComplexVector u, v, phi, varphi, psi, theta;
  Eigen::MatrixXcd eta;

  static DiscreteState zeros(const StateLayout& layout);
  ComplexVector pack(const StateLayout& layout) const;
  static DiscreteState unpack(const StateLayout& layout, const ComplexVector& flat);
};

/// Everything the solvers need: generator A, Gram matrix M of the energy inner product,
/// and the quadrature dissipation form D.
struct GeneratorAssembly {
  SparseMatrix A;
  SparseMatrix M;
  SparseMatrix D;
  StateLayout layout;
  PhysicalParams params;
  DampingProfile profile;
  MemoryKernel kernel;
  Grids grids;
  DiscretizationOptions options;
  std::vector<double> mu_node;        // mu*(x_i) at interior nodes
  std::vector<double> mu_face;        // arithmetic face averages, n_x + 1 faces
  std::vector<double> memory_weight;  // c_j = g(s_{j-1/2}) - g(s_{j+1/2}), j = 1..n_s-1 (index 0 unused)

  int size() const { return layout.size(); }
  bool damped() const { return layout.n_eta_x() > 0; }
};

/// Gram matrix of the energy inner product. Throws NumericalError naming the most negative
/// eigenvalue when the form is indefinite.
SparseMatrix assemble_gram(const PhysicalParams& params, const DampingProfile& profile, const MemoryKernel& kernel,
                           const Grids& grids, const DiscretizationOptions& options = {});

/// Same matrix without the definiteness check (for probing inadmissible parameters).
SparseMatrix assemble_gram_unchecked(const PhysicalParams& params, const DampingProfile& profile,
                                     const MemoryKernel& kernel, const Grids& grids,
                                     const DiscretizationOptions& options = {});

GeneratorAssembly assemble_generator(const PhysicalParams& params, const DampingProfile& profile,
                                     const MemoryKernel& kernel, const Grids& grids,
                                     const DiscretizationOptions& options = {});

StateLayout make_layout(const DampingProfile& profile, const Grids& grids, const DiscretizationOptions& options = {});

/// 1/2 sum_j w_j g_ss(s_j) sum_faces mu*_F |eta_x|^2 h with the Grids weights w_j.
double dissipation_form(const GeneratorAssembly& assembly, const ComplexVector& state);

/// -Re(U* M A U): the exact energy loss rate of the semi-discrete system.
double dissipation_rate(const GeneratorAssembly& assembly, const ComplexVector& state);

/// E = 1/2 U* M U.
double discrete_energy(const GeneratorAssembly& assembly, const ComplexVector& state);

/// ||U||_M = sqrt(U* M U).
double energy_norm(const SparseMatrix& gram, const ComplexVector& state);

/// Re(U* M A U).
double energy_production(const GeneratorAssembly& assembly, const ComplexVector& state);

}  // namespace ptl
