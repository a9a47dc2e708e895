// SPDX-License-Identifier: Apache-2.0
#include "ptl/evolve.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>
#include <type_traits>

#include "ptl/io.hpp"

namespace ptl {

CrankNicolson::CrankNicolson(const SparseMatrix& A, double dt) : dt_(dt), A_(A) {
  if (!(std::isfinite(dt) && dt != 0.0)) throw ValidationError("dt must be finite and nonzero");
  SparseMatrix I(A.rows(), A.cols());
  I.setIdentity();
  SparseMatrix lhs = I - (0.5 * dt) * A;
  lhs.makeCompressed();
  lu_.analyzePattern(lhs);
  lu_.factorize(lhs);
  if (lu_.info() != Eigen::Success) throw NumericalError("I - dt/2 A is singular: " + lu_.lastErrorMessage());
}

ComplexVector CrankNicolson::step(const ComplexVector& U) const {
  const ComplexVector rhs = U + (0.5 * dt_) * (A_ * U);
  const Eigen::VectorXd re = lu_.solve(rhs.real().eval());
  const Eigen::VectorXd im = lu_.solve(rhs.imag().eval());
  ComplexVector out(U.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

ComplexVector cn_step(const GeneratorAssembly& assembly, const ComplexVector& U, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  return CrankNicolson(assembly.A, dt).step(U);
}

double graph_norm(const GeneratorAssembly& assembly, const ComplexVector& U) {
  return energy_norm(assembly.M, U) + energy_norm(assembly.M, assembly.A * U);
}

std::string to_string(InitialPreset preset) {
  switch (preset) {
    case InitialPreset::rest_history: return "rest_history";
    case InitialPreset::memory_history: return "memory_history";
    case InitialPreset::checkpoint: return "checkpoint";
  }
  return "rest_history";
}

InitialPreset initial_preset_from_string(const std::string& name) {
  if (name == "rest_history") return InitialPreset::rest_history;
  if (name == "memory_history") return InitialPreset::memory_history;
  if (name == "checkpoint") return InitialPreset::checkpoint;
  throw ValidationError("preset must be rest_history, memory_history or checkpoint (got '" + name + "')");
}

DiscreteState preset_state(const GeneratorAssembly& assembly, InitialPreset preset) {
  if (preset == InitialPreset::checkpoint) throw ValidationError("checkpoint preset needs a checkpoint path");
  const auto& L = assembly.layout;
  const auto& x = assembly.grids.x;
  auto st = DiscreteState::zeros(L);
  for (int i = 0; i < L.n_x; ++i) {
    st.u(i) = std::sin(x[i]);
    st.v(i) = std::sin(2 * x[i]);
    st.phi(i) = 0.5 * std::sin(x[i]);
    st.psi(i) = 0.5 * std::sin(3 * x[i]);
  }
  if (preset == InitialPreset::memory_history) {
    const auto& s = assembly.grids.s_nodes;
    for (int r = 0; r < L.n_eta_x(); ++r)
      for (int j = 1; j < L.n_s; ++j) st.eta(r, j) = std::sin(x[L.eta_nodes[r]]) * s[j] * std::exp(-s[j]);
  }
  return st;
}

double default_dt(const Grids& grids) { return 5e-3 * kPi / grids.n_x; }

SimulationTrace simulate(const GeneratorAssembly& assembly, const ComplexVector& U0, const SimulationOptions& options) {
  if (U0.size() != assembly.size()) throw ValidationError("initial state length does not match the assembly");
  if (!(options.T > 0.0)) throw ValidationError("T must be positive");
  if (options.trace_every < 1) throw ValidationError("trace_every must be at least 1");
  if (options.snapshot_every < 0) throw ValidationError("snapshot_every must be non-negative");
  const double dt_req = options.dt > 0.0 ? options.dt : default_dt(assembly.grids);
  const int steps = std::max(1, static_cast<int>(std::ceil(options.T / dt_req - 1e-9)));
  const double dt = options.T / steps;

  SimulationTrace trace;
  trace.dt = dt;
  trace.steps = steps;
  trace.initial_graph_norm = graph_norm(assembly, U0);

  auto record = [&](double t, const ComplexVector& U) {
    trace.times.push_back(t);
    trace.energies.push_back(discrete_energy(assembly, U));
    trace.norms.push_back(energy_norm(assembly.M, U));
    trace.dissipation_rates.push_back(dissipation_rate(assembly, U));
  };

  const CrankNicolson cn(assembly.A, dt);
  ComplexVector U = U0;
  record(0.0, U);
  if (options.snapshot_every > 0) trace.snapshots.push_back({0.0, DiscreteState::unpack(assembly.layout, U)});
  const double E0 = trace.energies.front();
  double E_prev = E0;
  const bool check_monotone = assembly.damped();

  for (int n = 1; n <= steps; ++n) {
    U = cn.step(U);
    const double t = n * dt;
    if (!U.allFinite()) throw NumericalError("non-finite state at t = " + format_double(t));
    const double E = discrete_energy(assembly, U);
    if (check_monotone && E > E_prev + options.monotone_tol * E0) {
      std::ostringstream os;
      os << "energy increased at step " << n << " (t = " << format_double(t) << "): " << format_double(E_prev)
         << " -> " << format_double(E);
      throw NumericalError(os.str());
    }
    E_prev = E;
    if (n % options.trace_every == 0 || n == steps) record(t, U);
    if (options.snapshot_every > 0 && n % options.snapshot_every == 0)
      trace.snapshots.push_back({t, DiscreteState::unpack(assembly.layout, U)});
  }
  trace.final_state = std::move(U);
  return trace;
}

std::string trace_csv(const SimulationTrace& trace) {
  std::string out = "t,E,norm,diss_rate\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i)
    out += csv_row({trace.times[i], trace.energies[i], trace.norms[i], trace.dissipation_rates[i]});
  return out;
}

SimulationTrace parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,E,norm,diss_rate")
    throw ValidationError("trace CSV must start with the header t,E,norm,diss_rate");
  SimulationTrace trace;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    double v[4];
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < 4; ++c) {
      const auto res = std::from_chars(p, end, v[c]);
      if (res.ec != std::errc{}) throw ValidationError("malformed number in trace CSV row " + std::to_string(row));
      p = res.ptr;
      if (c < 3) {
        if (p == end || *p != ',') throw ValidationError("trace CSV row " + std::to_string(row) + " needs 4 columns");
        ++p;
      }
    }
    if (p != end) throw ValidationError("trailing data in trace CSV row " + std::to_string(row));
    trace.times.push_back(v[0]);
    trace.energies.push_back(v[1]);
    trace.norms.push_back(v[2]);
    trace.dissipation_rates.push_back(v[3]);
  }
  return trace;
}

namespace {

constexpr char kMagic[8] = {'P', 'T', 'L', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::int64_t, T>>;
  U bits;
  if constexpr (std::is_floating_point_v<T>) {
    static_assert(sizeof(T) == 8);
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<U>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw ValidationError("checkpoint is truncated");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_floating_point_v<T>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_{0};
};

}  // namespace

void checkpoint_save(const StateLayout& layout, const ComplexVector& state, double time,
                     const std::filesystem::path& path) {
  if (state.size() != layout.size()) throw ValidationError("state length does not match layout");
  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::int32_t>(out, layout.n_x);
  put_le<std::int32_t>(out, layout.n_s);
  put_le<std::int32_t>(out, layout.n_eta_x());
  for (int node : layout.eta_nodes) put_le<std::int32_t>(out, node);
  put_le<double>(out, time);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(state.size()));
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    put_le<double>(out, state(i).real());
    put_le<double>(out, state(i).imag());
  }
  write_atomic(path, out);
}

Checkpoint checkpoint_read(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  if (data.size() < sizeof kMagic || std::memcmp(data.data(), kMagic, sizeof kMagic) != 0)
    throw ValidationError("not a checkpoint file: " + path.string());
  const std::string body = data.substr(sizeof kMagic);
  Reader r(body);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.n_x = r.get<std::int32_t>();
  ck.n_s = r.get<std::int32_t>();
  const auto n_eta = r.get<std::int32_t>();
  if (ck.n_x < 0 || ck.n_s < 0 || n_eta < 0 || n_eta > ck.n_x) throw ValidationError("corrupt checkpoint header");
  ck.eta_nodes.resize(n_eta);
  for (auto& node : ck.eta_nodes) node = r.get<std::int32_t>();
  ck.time = r.get<double>();
  const auto n = r.get<std::uint64_t>();
  const std::uint64_t expected = 6ull * ck.n_x + static_cast<std::uint64_t>(n_eta) * (ck.n_s > 0 ? ck.n_s - 1 : 0);
  if (n != expected) throw ValidationError("checkpoint length does not match its header");
  ck.state.resize(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    const double re = r.get<double>();
    const double im = r.get<double>();
    ck.state(static_cast<Eigen::Index>(i)) = {re, im};
  }
  if (!r.done()) throw ValidationError("trailing bytes after checkpoint payload");
  return ck;
}

DiscreteState checkpoint_load(const std::filesystem::path& path, const StateLayout& expected) {
  const auto ck = checkpoint_read(path);
  if (ck.n_x != expected.n_x || ck.n_s != expected.n_s || ck.eta_nodes != expected.eta_nodes) {
    std::ostringstream os;
    os << "checkpoint shape (n_x=" << ck.n_x << ", n_s=" << ck.n_s << ", n_eta_x=" << ck.eta_nodes.size()
       << ") does not match the configured grid (n_x=" << expected.n_x << ", n_s=" << expected.n_s
       << ", n_eta_x=" << expected.n_eta_x() << ")";
    throw ValidationError(os.str());
  }
  return DiscreteState::unpack(expected, ck.state);
}

}  // namespace ptl
