// SPDX-License-Identifier: Apache-2.0
#include "ptl/discretize.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace ptl {

std::string to_string(MemoryWeighting weighting) {
  return weighting == MemoryWeighting::mu_star ? "mu_star" : "unweighted";
}

MemoryWeighting memory_weighting_from_string(const std::string& name) {
  if (name == "mu_star") return MemoryWeighting::mu_star;
  if (name == "unweighted") return MemoryWeighting::unweighted;
  throw ValidationError("memory_weighting must be mu_star or unweighted (got '" + name + "')");
}

DiscreteState DiscreteState::zeros(const StateLayout& layout) {
  DiscreteState s;
  for (auto* f : {&s.u, &s.v, &s.phi, &s.varphi, &s.psi, &s.theta}) *f = ComplexVector::Zero(layout.n_x);
  s.eta = Eigen::MatrixXcd::Zero(layout.n_eta_x(), layout.n_s);
  return s;
}

ComplexVector DiscreteState::pack(const StateLayout& layout) const {
  const int n = layout.n_x;
  for (const auto* f : {&u, &v, &phi, &varphi, &psi, &theta})
    if (f->size() != n) throw ValidationError("state field length does not match n_x");
  if (eta.rows() != layout.n_eta_x() || eta.cols() != layout.n_s)
    throw ValidationError("eta shape does not match (n_eta_x, n_s)");
  ComplexVector flat(layout.size());
  flat.segment(layout.u(0), n) = u;
  flat.segment(layout.v(0), n) = v;
  flat.segment(layout.phi(0), n) = phi;
  flat.segment(layout.varphi(0), n) = varphi;
  flat.segment(layout.psi(0), n) = psi;
  flat.segment(layout.theta(0), n) = theta;
  for (int r = 0; r < layout.n_eta_x(); ++r)
    for (int j = 1; j < layout.n_s; ++j) flat(layout.eta(r, j)) = eta(r, j);
  return flat;
}

DiscreteState DiscreteState::unpack(const StateLayout& layout, const ComplexVector& flat) {
  if (flat.size() != layout.size()) throw ValidationError("flat state length does not match layout");
  const int n = layout.n_x;
  DiscreteState s = zeros(layout);
  s.u = flat.segment(layout.u(0), n);
  s.v = flat.segment(layout.v(0), n);
  s.phi = flat.segment(layout.phi(0), n);
  s.varphi = flat.segment(layout.varphi(0), n);
  s.psi = flat.segment(layout.psi(0), n);
  s.theta = flat.segment(layout.theta(0), n);
  for (int r = 0; r < layout.n_eta_x(); ++r)
    for (int j = 1; j < layout.n_s; ++j) s.eta(r, j) = flat(layout.eta(r, j));
  return s;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct SpatialData {
  std::vector<double> mu_node;
  std::vector<double> mu_face;
};

SpatialData spatial_data(const DampingProfile& profile, const Grids& grids, const DiscretizationOptions& options) {
  validate_profile(profile);
  const int n = grids.n_x;
  SpatialData out;
  out.mu_node.resize(n);
  for (int i = 0; i < n; ++i) out.mu_node[i] = eval_damping(profile, grids.x[i]).value;
  out.mu_face.resize(n + 1);
  for (int f = 0; f <= n; ++f) {
    const double left = f == 0 ? eval_damping(profile, 0.0).value : out.mu_node[f - 1];
    const double right = f == n ? eval_damping(profile, kPi).value : out.mu_node[f];
    const double avg = 0.5 * (left + right);
    out.mu_face[f] = avg > options.support_threshold ? avg : 0.0;
  }
  return out;
}

StateLayout layout_from(const SpatialData& data, const Grids& grids) {
  StateLayout layout;
  layout.n_x = grids.n_x;
  layout.n_s = grids.n_s();
  for (int i = 0; i < grids.n_x; ++i)
    if (data.mu_face[i] > 0.0 || data.mu_face[i + 1] > 0.0) layout.eta_nodes.push_back(i);
  return layout;
}

std::vector<double> memory_weights(const MemoryKernel& kernel, const Grids& grids) {
  const auto& s = grids.s_nodes;
  const int n_s = grids.n_s();
  std::vector<double> c(n_s, 0.0);
  for (int j = 1; j < n_s; ++j) {
    const double lo = 0.5 * (s[j - 1] + s[j]);
    const double hi = j + 1 < n_s ? 0.5 * (s[j] + s[j + 1]) : s[j];
    c[j] = kernel.mass(lo, hi);
  }
  return c;
}

// Adds scale * h G^T diag(w) G, where (G u)_f = (u_f - u_{f-1}) / h. The index maps send a
// spatial node to its row (column) offset, or -1 where the field is identically zero.
template <typename RowIndex, typename ColIndex>
void add_face_form(Triplets& t, int row_off, int col_off, const std::vector<double>& w, double h, double scale,
                   int n_x, RowIndex row_index, ColIndex col_index) {
  for (int f = 0; f <= n_x; ++f) {
    if (w[f] == 0.0) continue;
    const double c = scale * w[f] / h;
    const int nodes[2] = {f - 1, f < n_x ? f : -1};
    const double sign[2] = {-1.0, 1.0};
    for (int a = 0; a < 2; ++a) {
      if (nodes[a] < 0) continue;
      const int row = row_index(nodes[a]);
      if (row < 0) continue;
      for (int b = 0; b < 2; ++b) {
        if (nodes[b] < 0) continue;
        const int col = col_index(nodes[b]);
        if (col >= 0) t.emplace_back(row_off + row, col_off + col, c * sign[a] * sign[b]);
      }
    }
  }
}

template <typename Index>
void add_face_form(Triplets& t, int row_off, int col_off, const std::vector<double>& w, double h, double scale,
                   int n_x, Index index) {
  add_face_form(t, row_off, col_off, w, h, scale, n_x, index, index);
}

// (C u)_i = (u_{i+1} - u_{i-1}) / (2h)
void add_centered(Triplets& t, int row_off, int col_off, double scale, double h, int n_x, bool transpose = false) {
  const double c = scale / (2.0 * h);
  for (int i = 0; i < n_x; ++i) {
    if (i + 1 < n_x) transpose ? t.emplace_back(row_off + i + 1, col_off + i, c)
                               : t.emplace_back(row_off + i, col_off + i + 1, c);
    if (i - 1 >= 0) transpose ? t.emplace_back(row_off + i - 1, col_off + i, -c)
                              : t.emplace_back(row_off + i, col_off + i - 1, -c);
  }
}

void add_identity(Triplets& t, int row_off, int col_off, double scale, int n) {
  for (int i = 0; i < n; ++i) t.emplace_back(row_off + i, col_off + i, scale);
}

std::vector<double> eta_face_weights(const SpatialData& data, const DiscretizationOptions& options) {
  if (options.memory_weighting == MemoryWeighting::mu_star) return data.mu_face;
  std::vector<double> w(data.mu_face.size());
  for (std::size_t f = 0; f < w.size(); ++f) w[f] = data.mu_face[f] > 0.0 ? 1.0 : 0.0;
  return w;
}

std::vector<int> node_to_eta_row(const StateLayout& layout) {
  std::vector<int> map(layout.n_x, -1);
  for (int r = 0; r < layout.n_eta_x(); ++r) map[layout.eta_nodes[r]] = r;
  return map;
}

SparseMatrix build_gram(const PhysicalParams& p, const SpatialData& data, const StateLayout& layout,
                        const std::vector<double>& c, const Grids& grids, const DiscretizationOptions& options) {
  const int n = grids.n_x;
  const double h = grids.h;
  const std::vector<double> ones(n + 1, 1.0);
  auto identity_index = [](int i) { return i; };
  Triplets t;
  add_face_form(t, layout.u(0), layout.u(0), ones, h, p.mu, n, identity_index);
  add_identity(t, layout.v(0), layout.v(0), p.rho * h, n);
  add_face_form(t, layout.phi(0), layout.phi(0), ones, h, p.b, n, identity_index);
  add_identity(t, layout.phi(0), layout.phi(0), p.xi * h, n);
  add_centered(t, layout.phi(0), layout.u(0), p.gamma * h, h, n);
  add_centered(t, layout.u(0), layout.phi(0), p.gamma * h, h, n, /*transpose=*/true);
  add_identity(t, layout.varphi(0), layout.varphi(0), p.J * h, n);
  add_face_form(t, layout.psi(0), layout.psi(0), ones, h, p.k, n, identity_index);
  add_face_form(t, layout.phi(0), layout.psi(0), ones, h, p.m, n, identity_index);
  add_face_form(t, layout.psi(0), layout.phi(0), ones, h, p.m, n, identity_index);
  add_identity(t, layout.theta(0), layout.theta(0), p.a * h, n);

  const auto omega = eta_face_weights(data, options);
  const auto eta_row = node_to_eta_row(layout);
  const int stride = layout.n_mem();
  for (int j = 1; j < layout.n_s; ++j) {
    const int off = layout.eta(0, j);
    add_face_form(t, off, off, omega, h, c[j], n, [&](int i) { return eta_row[i] < 0 ? -1 : eta_row[i] * stride; });
  }
  SparseMatrix M(layout.size(), layout.size());
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

void check_definite(const SparseMatrix& M) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(M);
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) ok = (ldlt.vectorD().array() > 0.0).all();
  if (ok) return;
  std::ostringstream os;
  os << "Gram matrix is not positive definite";
  if (M.rows() <= 4000) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(M), Eigen::EigenvaluesOnly);
    os << ": most negative eigenvalue " << eig.eigenvalues().minCoeff();
  } else if (ldlt.info() == Eigen::Success) {
    os << ": smallest LDLT pivot " << ldlt.vectorD().minCoeff();
  }
  throw NumericalError(os.str());
}

void check_grids_match(const MemoryKernel& kernel, const Grids& grids) {
  validate_kernel(kernel);
  if (grids.n_s() < 2 || std::abs(grids.s_max() - kernel.s_max) > 1e-9 * kernel.s_max)
    throw ValidationError("memory grid must span [0, kernel.s_max]");
}

}  // namespace

StateLayout make_layout(const DampingProfile& profile, const Grids& grids, const DiscretizationOptions& options) {
  return layout_from(spatial_data(profile, grids, options), grids);
}

SparseMatrix assemble_gram_unchecked(const PhysicalParams& params, const DampingProfile& profile,
                                     const MemoryKernel& kernel, const Grids& grids,
                                     const DiscretizationOptions& options) {
  check_grids_match(kernel, grids);
  const auto data = spatial_data(profile, grids, options);
  const auto layout = layout_from(data, grids);
  return build_gram(params, data, layout, memory_weights(kernel, grids), grids, options);
}

SparseMatrix assemble_gram(const PhysicalParams& params, const DampingProfile& profile, const MemoryKernel& kernel,
                           const Grids& grids, const DiscretizationOptions& options) {
  SparseMatrix M = assemble_gram_unchecked(params, profile, kernel, grids, options);
  check_definite(M);
  return M;
}

GeneratorAssembly assemble_generator(const PhysicalParams& params, const DampingProfile& profile,
                                     const MemoryKernel& kernel, const Grids& grids,
                                     const DiscretizationOptions& options) {
  validate_params(params);
  check_grids_match(kernel, grids);
  const auto data = spatial_data(profile, grids, options);

  GeneratorAssembly out;
  out.params = params;
  out.profile = profile;
  out.kernel = kernel;
  out.grids = grids;
  out.options = options;
  out.mu_node = data.mu_node;
  out.mu_face = data.mu_face;
  out.layout = layout_from(data, grids);
  out.memory_weight = memory_weights(kernel, grids);

  const auto& L = out.layout;
  const auto& p = params;
  const int n = grids.n_x;
  const double h = grids.h;
  const std::vector<double> ones(n + 1, 1.0);
  auto identity_index = [](int i) { return i; };
  const auto eta_row = node_to_eta_row(L);
  const auto& s = grids.s_nodes;
  const auto& c = out.memory_weight;

  // Upwind transport in s needs c_j / ds_j non-increasing for the energy to decay.
  for (int j = 1; j + 1 < L.n_s; ++j) {
    const double here = c[j] / (s[j] - s[j - 1]);
    const double next = c[j + 1] / (s[j + 1] - s[j]);
    if (next > here * (1.0 + 1e-12))
      throw NumericalError("memory grid breaks the monotone weight condition needed for dissipativity");
  }

  Triplets t;
  // u' = v, phi' = varphi, psi' = theta
  add_identity(t, L.u(0), L.v(0), 1.0, n);
  add_identity(t, L.phi(0), L.varphi(0), 1.0, n);
  add_identity(t, L.psi(0), L.theta(0), 1.0, n);

  // rho v' = (mu u_x + mu* zeta_x)_x + gamma phi_x - beta theta_x, with zeta = -sum_j c_j eta_j.
  // Face forms are h G^T W G, so dividing by h gives -(flux divergence).
  add_face_form(t, L.v(0), L.u(0), ones, h, -p.mu / (p.rho * h), n, identity_index);
  add_centered(t, L.v(0), L.phi(0), p.gamma / p.rho, h, n);
  add_centered(t, L.v(0), L.theta(0), -p.beta / p.rho, h, n);
  const int stride = L.n_mem();
  auto eta_col = [&](int i) { return eta_row[i] < 0 ? -1 : eta_row[i] * stride; };
  for (int j = 1; j < L.n_s; ++j)
    add_face_form(t, L.v(0), L.eta(0, j), data.mu_face, h, c[j] / (p.rho * h), n, identity_index, eta_col);

  // eta' = -v - eta_s, first-order upwind with inflow eta(s = 0) = 0
  for (int r = 0; r < L.n_eta_x(); ++r) {
    const int node = L.eta_nodes[r];
    for (int j = 1; j < L.n_s; ++j) {
      const double inv_ds = 1.0 / (s[j] - s[j - 1]);
      t.emplace_back(L.eta(r, j), L.v(node), -1.0);
      t.emplace_back(L.eta(r, j), L.eta(r, j), -inv_ds);
      if (j > 1) t.emplace_back(L.eta(r, j), L.eta(r, j - 1), inv_ds);
    }
  }

  // J varphi' = b phi_xx + m psi_xx - xi phi + d theta - gamma u_x
  add_face_form(t, L.varphi(0), L.phi(0), ones, h, -p.b / (p.J * h), n, identity_index);
  add_face_form(t, L.varphi(0), L.psi(0), ones, h, -p.m / (p.J * h), n, identity_index);
  add_identity(t, L.varphi(0), L.phi(0), -p.xi / p.J, n);
  add_identity(t, L.varphi(0), L.theta(0), p.d / p.J, n);
  add_centered(t, L.varphi(0), L.u(0), -p.gamma / p.J, h, n);

  // a theta' = k psi_xx + m phi_xx - d varphi - beta v_x
  add_face_form(t, L.theta(0), L.psi(0), ones, h, -p.k / (p.a * h), n, identity_index);
  add_face_form(t, L.theta(0), L.phi(0), ones, h, -p.m / (p.a * h), n, identity_index);
  add_identity(t, L.theta(0), L.varphi(0), -p.d / p.a, n);
  add_centered(t, L.theta(0), L.v(0), -p.beta / p.a, h, n);

  SparseMatrix A(L.size(), L.size());
  A.setFromTriplets(t.begin(), t.end());
  out.A = std::move(A);

  out.M = build_gram(params, data, L, c, grids, options);
  check_definite(out.M);

  // Quadrature dissipation form: w_j g_ss(s_j) h G^T diag(omega) G on each eta block.
  const auto omega = eta_face_weights(data, options);
  Triplets td;
  for (int j = 1; j < L.n_s; ++j) {
    const double scale = grids.s_weights[j] * kernel.g_ss(s[j]);
    add_face_form(td, L.eta(0, j), L.eta(0, j), omega, h, scale, n, eta_col);
  }
  out.D.resize(L.size(), L.size());
  out.D.setFromTriplets(td.begin(), td.end());
  return out;
}

}  // namespace ptl

namespace ptl {

double energy_norm(const SparseMatrix& gram, const ComplexVector& state) {
  return std::sqrt(std::max(0.0, state.dot(gram * state).real()));
}

double discrete_energy(const GeneratorAssembly& assembly, const ComplexVector& state) {
  return 0.5 * state.dot(assembly.M * state).real();
}

double energy_production(const GeneratorAssembly& assembly, const ComplexVector& state) {
  const ComplexVector Au = assembly.A * state;
  return state.dot(assembly.M * Au).real();
}

double dissipation_rate(const GeneratorAssembly& assembly, const ComplexVector& state) {
  return -energy_production(assembly, state);
}

double dissipation_form(const GeneratorAssembly& assembly, const ComplexVector& state) {
  return 0.5 * state.dot(assembly.D * state).real();
}

}  // namespace ptl
