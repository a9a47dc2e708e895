// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/SparseLU>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptl/discretize.hpp"

namespace ptl {

/// Trapezoidal one-step map for dU/dt = A U. The factorization of (I - dt/2 A) is built once and
/// reused for every step. A negative dt steps backward in time.
class CrankNicolson {
 public:
  CrankNicolson(const SparseMatrix& A, double dt);

  ComplexVector step(const ComplexVector& U) const;
  double dt() const { return dt_; }

 private:
  double dt_;
  SparseMatrix A_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

/// One step from scratch. Prefer CrankNicolson when stepping repeatedly.
ComplexVector cn_step(const GeneratorAssembly& assembly, const ComplexVector& U, double dt);

/// ||U||_M + ||A U||_M.
double graph_norm(const GeneratorAssembly& assembly, const ComplexVector& U);

enum class InitialPreset { rest_history, memory_history, checkpoint };

std::string to_string(InitialPreset preset);
InitialPreset initial_preset_from_string(const std::string& name);

/// Sine-mode initial data. rest_history has no past motion (eta = 0); memory_history takes the
/// past displacement u0(x)(1 + s e^{-s}), i.e. eta0(x, s) = u0(x) s e^{-s}.
DiscreteState preset_state(const GeneratorAssembly& assembly, InitialPreset preset);

/// Default step 5e-3 pi / n_x.
double default_dt(const Grids& grids);

struct SimulationOptions {
  double dt{0.0};        // <= 0 selects default_dt
  double T{1.0};
  int trace_every{1};    // record every k-th step (the final step is always recorded)
  int snapshot_every{0}; // 0 disables field snapshots
  double monotone_tol{1e-10};
};

struct Snapshot {
  double t;
  DiscreteState state;
};

struct SimulationTrace {
  std::vector<double> times;
  std::vector<double> energies;
  std::vector<double> norms;
  std::vector<double> dissipation_rates;
  std::vector<Snapshot> snapshots;
  double initial_graph_norm{0.0};
  double dt{0.0};
  int steps{0};
  ComplexVector final_state;
};

/// Steps U0 to time T. The step is shrunk so that T is an integer number of steps. In damped
/// runs an energy increase beyond monotone_tol * E(0) aborts with NumericalError.
SimulationTrace simulate(const GeneratorAssembly& assembly, const ComplexVector& U0, const SimulationOptions& options);

/// Trace as CSV with header t,E,norm,diss_rate.
std::string trace_csv(const SimulationTrace& trace);

/// Parses trace_csv output back (norm and rate columns included).
SimulationTrace parse_trace_csv(const std::string& text);

/// Binary checkpoint: 8-byte magic "PTLCKPT\0", u32 version, i32 n_x, i32 n_s, i32 n_eta_x,
/// i32 eta node indices, f64 time, u64 length N, then N (re, im) pairs. All little-endian.
struct Checkpoint {
  int n_x{0};
  int n_s{0};
  std::vector<int> eta_nodes;
  double time{0.0};
  ComplexVector state;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void checkpoint_save(const StateLayout& layout, const ComplexVector& state, double time,
                     const std::filesystem::path& path);
Checkpoint checkpoint_read(const std::filesystem::path& path);
/// Reads and checks that the stored shape matches `expected`.
DiscreteState checkpoint_load(const std::filesystem::path& path, const StateLayout& expected);

}  // namespace ptl
