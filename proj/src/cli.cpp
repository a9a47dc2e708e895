// SPDX-License-Identifier: Apache-2.0
#include "ptl/cli.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "json.hpp"
#include "ptl/analysis.hpp"
#include "ptl/config.hpp"
#include "ptl/io.hpp"
#include "ptl/kernel_lab.hpp"
#include "ptl/spectra.hpp"

namespace ptl {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Context {
  std::string command;
  RunConfig config;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
};

void write_json(const fs::path& path, const json& doc) { write_atomic(path, doc.dump(2) + "\n"); }

// Non-finite values are not representable in JSON; they become null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string short_num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

json grid_summary(const GeneratorAssembly& a) {
  return {{"n_x", a.layout.n_x},          {"n_s", a.layout.n_s},
          {"unknowns", a.size()},         {"eta_nodes", a.layout.n_eta_x()},
          {"s_max", a.grids.s_max()},     {"grading_ratio", a.grids.grading_ratio},
          {"memory_weighting", to_string(a.options.memory_weighting)}};
}

// ---------------------------------------------------------------- kernel-check

int kernel_check(Context& ctx) {
  const auto& c = ctx.config;
  const MemoryKernel kernel = config_kernel(c);
  const Grids grids = build_grids(3, c.kernel_check.quadrature_n_s, kernel.s_max, c.grading_ratio);
  const auto& kc = c.kernel_check;
  const KernelCertificate cert = certify_kernel(kernel, grids, kc.epsilon, kc.lambda_max, kc.lambda_points);

  // Untruncated closed form: each term contributes 2 a eps^2 / (kappa^2 + eps^2), increasing in lambda.
  double closed = 0.0;
  for (const auto& t : kernel.terms) closed += 2.0 * t.amplitude * kc.epsilon * kc.epsilon / (t.rate * t.rate + kc.epsilon * kc.epsilon);

  std::string curve = "lambda,integral\n";
  for (double lambda : log_space(kc.epsilon, kc.lambda_max, kc.lambda_points))
    curve += csv_row({lambda, frequency_integral(kernel, lambda, grids)});
  write_atomic(ctx.out_dir / "delta_curve.csv", curve);

  json terms = json::array();
  for (const auto& t : kernel.terms) terms.push_back({{"amplitude", t.amplitude}, {"rate", t.rate}});
  json doc = {{"kernel", {{"terms", terms}, {"s_max", kernel.s_max}, {"tail_tol", kernel.tail_tol}}},
              {"h1_ok", cert.h1_ok},
              {"h2_ok", cert.h2_ok},
              {"failures", cert.failures},
              {"K_min", num(cert.K_h2)},
              {"ratio_sup", num(cert.ratio_sup)},
              {"ratio_sup_at", num(cert.ratio_sup_at)},
              {"epsilon", cert.epsilon},
              {"delta", num(cert.delta)},
              {"delta_closed_form", num(closed)},
              {"delta_relative_gap", num(std::abs(cert.delta - closed) / closed)},
              {"lambda_max", cert.lambda_max},
              {"lambda_points", cert.lambda_points},
              {"max_nodes_used", cert.max_nodes_used},
              {"tail_bound", num(cert.tail_bound)}};
  write_json(ctx.out_dir / "kernel_certificate.json", doc);

  if (!cert.h1_ok || !cert.h2_ok) throw ValidationError(cert.failures);
  ctx.out << "kernel-check: K_min=" << short_num(cert.K_h2) << " ratio_sup=" << short_num(cert.ratio_sup)
          << " delta=" << short_num(cert.delta) << " (closed form " << short_num(closed) << ") -> "
          << (ctx.out_dir / "kernel_certificate.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- assemble-report

std::string triplets(const SparseMatrix& S) {
  std::vector<std::tuple<int, int, double>> entries;
  entries.reserve(static_cast<std::size_t>(S.nonZeros()));
  for (int k = 0; k < S.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(S, k); it; ++it)
      entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  std::sort(entries.begin(), entries.end());
  std::string text = "# row col value (0-based); rows=" + std::to_string(S.rows()) +
                     " cols=" + std::to_string(S.cols()) + " nnz=" + std::to_string(entries.size()) + "\n";
  for (const auto& [r, col, v] : entries)
    text += std::to_string(r) + " " + std::to_string(col) + " " + format_double(v) + "\n";
  return text;
}

int assemble_report(Context& ctx) {
  const auto& c = ctx.config;
  const GeneratorAssembly a = config_assembly(c);
  const int N = a.size();

  json gram = {{"method", "skipped"}, {"min", nullptr}, {"max", nullptr}};
  if (N <= c.spectrum.dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(a.M), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("Gram eigensolve failed");
    gram = {{"method", "dense"}, {"min", es.eigenvalues()(0)}, {"max", es.eigenvalues()(N - 1)}};
  }

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal;
  std::string csv = "sample,production,norm2,ratio,quadrature_loss\n";
  double worst = -1e300, best = 1e300, mean = 0.0;
  const int samples = c.assemble_report.samples;
  for (int k = 0; k < samples; ++k) {
    ComplexVector U(N);
    for (int i = 0; i < N; ++i) {
      const double re = normal(rng);
      U(i) = {re, normal(rng)};
    }
    const double production = energy_production(a, U);
    const double norm2 = (U.adjoint() * (a.M * U)).real()(0);
    const double ratio = production / norm2;
    worst = std::max(worst, ratio);
    best = std::min(best, ratio);
    mean += ratio / samples;
    csv += csv_row({static_cast<double>(k), production, norm2, ratio, dissipation_form(a, U)});
  }
  write_atomic(ctx.out_dir / "dissipativity.csv", csv);

  json files = json::array();
  if (c.assemble_report.export_matrices) {
    for (const auto& [name, S] : {std::pair<const char*, const SparseMatrix*>{"A", &a.A}, {"M", &a.M}, {"D", &a.D}}) {
      const std::string file = std::string(name) + ".triplets";
      write_atomic(ctx.out_dir / file, triplets(*S));
      files.push_back(file);
    }
  }

  json doc = {{"grid", grid_summary(a)},
              {"nnz", {{"A", a.A.nonZeros()}, {"M", a.M.nonZeros()}, {"D", a.D.nonZeros()}}},
              {"gram_eigenvalues", gram},
              {"dissipativity",
               {{"samples", samples},
                {"seed", c.seed},
                {"max_ratio", samples > 0 ? num(worst) : json(nullptr)},
                {"min_ratio", samples > 0 ? num(best) : json(nullptr)},
                {"mean_ratio", samples > 0 ? num(mean) : json(nullptr)}}},
              {"exported", files}};
  write_json(ctx.out_dir / "assemble_report.json", doc);

  ctx.out << "assemble-report: N=" << N << " nnz(A)=" << a.A.nonZeros();
  if (gram["min"].is_number()) ctx.out << " gram_min=" << short_num(gram["min"].get<double>());
  if (samples > 0) ctx.out << " max Re(U*MAU)/U*MU=" << short_num(worst);
  ctx.out << " -> " << (ctx.out_dir / "assemble_report.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

void write_snapshots(const fs::path& dir, const GeneratorAssembly& a, const std::vector<Snapshot>& snaps) {
  const char* names[] = {"u", "v", "phi", "varphi", "psi", "theta"};
  for (int f = 0; f < 6; ++f) {
    std::string csv = "t,x,re,im\n";
    for (const auto& s : snaps) {
      const ComplexVector* fields[] = {&s.state.u, &s.state.v, &s.state.phi, &s.state.varphi, &s.state.psi, &s.state.theta};
      for (int i = 0; i < a.layout.n_x; ++i)
        csv += csv_row({s.t, a.grids.x[i], (*fields[f])(i).real(), (*fields[f])(i).imag()});
    }
    write_atomic(dir / (std::string(names[f]) + ".csv"), csv);
  }
  std::string csv = "t,x,s,re,im\n";
  for (const auto& s : snaps)
    for (int r = 0; r < a.layout.n_eta_x(); ++r)
      for (int j = 0; j < a.layout.n_s; ++j)
        csv += csv_row({s.t, a.grids.x[a.layout.eta_nodes[r]], a.grids.s_nodes[j], s.state.eta(r, j).real(),
                        s.state.eta(r, j).imag()});
  write_atomic(dir / "eta.csv", csv);
}

int simulate_cmd(Context& ctx) {
  const auto& c = ctx.config;
  const GeneratorAssembly a = config_assembly(c);
  const auto& sb = c.simulate;
  const DiscreteState initial = sb.preset == InitialPreset::checkpoint ? checkpoint_load(sb.checkpoint, a.layout)
                                                                       : preset_state(a, sb.preset);
  SimulationOptions opt;
  opt.dt = sb.dt > 0.0 ? sb.dt : default_dt(a.grids);
  opt.T = sb.T;
  opt.trace_every = sb.trace_every;
  opt.snapshot_every = sb.snapshot_every;
  opt.monotone_tol = sb.monotone_tol;
  const SimulationTrace trace = simulate(a, initial.pack(a.layout), opt);

  write_atomic(ctx.out_dir / "trace.csv", trace_csv(trace));
  if (!trace.snapshots.empty()) write_snapshots(ctx.out_dir / "snapshots", a, trace.snapshots);
  const double t_end = trace.times.back();
  checkpoint_save(a.layout, trace.final_state, t_end, ctx.out_dir / "final.ckpt");

  const EnergyBudget budget = energy_budget(trace);
  const double E0 = trace.energies.front();
  double drift = 0.0;
  for (double E : trace.energies) drift = std::max(drift, std::abs(E - E0) / E0);
  json doc = {{"grid", grid_summary(a)},
              {"preset", to_string(sb.preset)},
              {"damped", a.damped()},
              {"dt", trace.dt},
              {"steps", trace.steps},
              {"T", t_end},
              {"trace_rows", trace.times.size()},
              {"snapshots", trace.snapshots.size()},
              {"initial_energy", E0},
              {"final_energy", trace.energies.back()},
              {"max_relative_energy_change", drift},
              {"initial_graph_norm", trace.initial_graph_norm},
              {"final_norm_ratio", trace.norms.back() / trace.initial_graph_norm},
              {"energy_budget",
               {{"drop", budget.drop},
                {"integrated_dissipation", budget.integrated_dissipation},
                {"relative_gap", budget.relative_gap}}},
              {"checkpoint", "final.ckpt"}};
  write_json(ctx.out_dir / "simulate_summary.json", doc);

  ctx.out << "simulate: " << trace.steps << " steps of dt=" << short_num(trace.dt) << " to T=" << short_num(t_end)
          << " E(0)=" << short_num(E0) << " E(T)=" << short_num(trace.energies.back()) << " -> "
          << (ctx.out_dir / "trace.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- spectrum

SpectralOptions spectral_options(const RunConfig& c) {
  SpectralOptions opt;
  opt.dense_limit = c.spectrum.dense_limit;
  return opt;
}

int spectrum_cmd(Context& ctx) {
  const auto& c = ctx.config;
  const GeneratorAssembly a = config_assembly(c);
  const SpectralContext sc(a, spectral_options(c));
  if (c.spectrum.count == 0 && !sc.dense())
    throw ValidationError("spectrum.count must be positive when the system exceeds spectrum.dense_limit");
  const auto pairs = sc.eigenvalues(c.spectrum.count, {c.spectrum.shift_re, c.spectrum.shift_im});
  write_atomic(ctx.out_dir / "spectrum.csv", spectrum_csv(pairs));

  double max_re = -1e300, min_abs = 1e300, max_res = 0.0;
  int converged = 0;
  for (const auto& p : pairs) {
    max_re = std::max(max_re, p.value.real());
    min_abs = std::min(min_abs, std::abs(p.value));
    max_res = std::max(max_res, p.residual);
    converged += p.converged ? 1 : 0;
  }
  json doc = {{"grid", grid_summary(a)},
              {"method", sc.dense() ? "dense" : "shift-invert Arnoldi"},
              {"shift", {c.spectrum.shift_re, c.spectrum.shift_im}},
              {"count", pairs.size()},
              {"converged", converged},
              {"max_real_part", num(max_re)},
              {"min_modulus", num(min_abs)},
              {"max_residual", num(max_res)}};
  write_json(ctx.out_dir / "spectrum_summary.json", doc);

  if (converged != static_cast<int>(pairs.size()))
    throw NumericalError(std::to_string(pairs.size() - converged) + " eigenpairs did not converge");
  ctx.out << "spectrum: " << pairs.size() << " eigenvalues, max Re=" << short_num(max_re)
          << " min |lambda|=" << short_num(min_abs) << " -> " << (ctx.out_dir / "spectrum.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- resolvent-scan

int scan_cmd(Context& ctx) {
  const auto& c = ctx.config;
  const GeneratorAssembly a = config_assembly(c);
  const SpectralContext sc(a, spectral_options(c));
  const ResolventScan scan = resolvent_scan(sc, c.scan.lambda_min, c.scan.lambda_max, c.scan.points, c.threads, c.scan.p);
  write_atomic(ctx.out_dir / "scan.csv", scan_csv(scan));

  const double max_norm = *std::max_element(scan.norms.begin(), scan.norms.end());
  const auto flagged = std::count(scan.near_singular.begin(), scan.near_singular.end(), true);
  json doc = {{"grid", grid_summary(a)},
              {"lambda_min", c.scan.lambda_min},
              {"lambda_max", c.scan.lambda_max},
              {"points", scan.lambdas.size()},
              {"p", scan.p},
              {"fit_exponent", num(scan.fit_exponent)},
              {"sup_scaled", num(scan.sup_scaled)},
              {"sup_scaled_at", num(scan.sup_scaled_at)},
              {"min_inverse_norm", num(1.0 / max_norm)},
              {"near_singular_points", flagged}};
  write_json(ctx.out_dir / "scan_summary.json", doc);

  ctx.out << "resolvent-scan: " << scan.lambdas.size() << " points, fit_exponent=" << short_num(scan.fit_exponent)
          << " sup_scaled=" << short_num(scan.sup_scaled) << " -> " << (ctx.out_dir / "scan.csv").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- decay-fit

int decay_cmd(Context& ctx) {
  const auto& d = ctx.config.decay;
  const fs::path trace_path = d.trace.empty() ? ctx.out_dir / "trace.csv" : fs::path(d.trace);
  const SimulationTrace trace = parse_trace_csv(read_file(trace_path));

  double gn = d.graph_norm;
  std::string source = "config";
  if (gn == 0.0) {
    const fs::path summary = trace_path.parent_path() / "simulate_summary.json";
    source = "unit";
    gn = 1.0;
    if (fs::exists(summary)) {
      try {
        const json s = json::parse(read_file(summary));
        gn = s.at("initial_graph_norm").get<double>();
        source = summary.filename().string();
      } catch (const json::exception& e) {
        throw ValidationError("cannot read initial_graph_norm from " + summary.string() + ": " + e.what());
      }
    }
  }

  const DecayFit fit = decay_fit(trace.times, trace.norms, gn, {d.t_lo, d.t_hi});
  std::string csv = "t,log_ratio,residual\n";
  std::size_t k = 0;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double t = trace.times[i];
    if (t < fit.t_lo || t > fit.t_hi) continue;
    csv += csv_row({t, std::log(trace.norms[i] / gn), fit.residuals[k++]});
  }
  write_atomic(ctx.out_dir / "decay_residuals.csv", csv);

  json doc = {{"trace", trace_path.generic_string()},
              {"window", {fit.t_lo, fit.t_hi}},
              {"samples", fit.samples},
              {"alpha", fit.alpha},
              {"log_constant", fit.log_constant},
              {"r_squared", fit.r_squared},
              {"graph_norm", gn},
              {"graph_norm_source", source},
              {"reference_alpha", kReferenceDecayRate},
              {"note", "finite-dimensional runs decay exponentially in the tail; alpha is a window fit, not a limit"}};
  write_json(ctx.out_dir / "decay_fit.json", doc);

  ctx.out << "decay-fit: alpha=" << short_num(fit.alpha) << " over [" << short_num(fit.t_lo) << ", "
          << short_num(fit.t_hi) << "] r^2=" << short_num(fit.r_squared) << " (reference 0.625) -> "
          << (ctx.out_dir / "decay_fit.json").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- wiring

std::string env_or(const std::map<std::string, std::string>& env, const std::string& key) {
  const auto it = env.find(key);
  return it == env.end() ? std::string() : it->second;
}

template <class T>
T parse_flag_value(const std::string& text, const std::string& name) {
  T value{};
  std::istringstream is(text);
  is >> value;
  if (!is || !is.eof()) throw ValidationError(name + " is not a valid number: '" + text + "'");
  return value;
}

}  // namespace

int run(const std::vector<std::string>& args, const std::map<std::string, std::string>& env, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Porous thermoelastic rod with local memory damping: discretization, spectra and decay", "ptl"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  bool print_schema = false;
  auto* o_config = app.add_option("--config", config_path, "JSON config document (env PTL_CONFIG)");
  auto* o_out = app.add_option("--out", out_dir, "output directory (env PTL_OUT)");
  auto* o_seed = app.add_option("--seed", seed, "random seed, u64 (env PTL_SEED)");
  auto* o_threads = app.add_option("--threads", threads, "worker threads (env PTL_THREADS)")->check(CLI::PositiveNumber);
  app.add_flag("--print-schema", print_schema, "print the config JSON Schema and exit");

  const std::string keys = config_help();
  app.footer("Exit codes: 0 ok, 1 validation failure, 2 numerical failure.\n\n" + keys);
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"kernel-check", "certify the memory kernel and the frequency bound delta"},
      {"assemble-report", "assemble A, M, D and report sizes, Gram extremes and dissipativity samples"},
      {"simulate", "Crank-Nicolson run writing trace.csv, snapshots and a final checkpoint"},
      {"spectrum", "eigenvalues of the generator nearest a shift"},
      {"resolvent-scan", "energy-norm resolvent along the imaginary axis"},
      {"decay-fit", "fit ||U(t)|| ~ C t^-alpha on a recorded trace"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->footer(keys);

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  if (print_schema) {
    out << config_schema();
    return kExitOk;
  }
  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    err << "error: a subcommand is required\n" << app.help();
    return kExitValidation;
  }
  const std::string command = chosen.front()->get_name();

  try {
    if (o_config->count() == 0) config_path = env_or(env, "PTL_CONFIG");
    RunConfig config = config_path.empty() ? RunConfig{} : parse_config(read_file(config_path));
    apply_env_overrides(config, env);
    if (o_out->count() > 0)
      config.out_dir = out_dir;
    else if (const auto v = env_or(env, "PTL_OUT"); !v.empty())
      config.out_dir = v;
    if (o_seed->count() > 0)
      config.seed = seed;
    else if (const auto v = env_or(env, "PTL_SEED"); !v.empty())
      config.seed = parse_flag_value<std::uint64_t>(v, "PTL_SEED");
    if (o_threads->count() > 0)
      config.threads = threads;
    else if (const auto v = env_or(env, "PTL_THREADS"); !v.empty())
      config.threads = parse_flag_value<int>(v, "PTL_THREADS");

    const auto used = blocks_used_by(command);
    for (const auto& block : config.blocks_present)
      if (!used.count(block)) err << "warning: config block '" << block << "' is not used by " << command << "; ignored\n";
    validate_config(config, command);

    Context ctx{command, config, fs::path(config.out_dir), out, err};
    if (command == "kernel-check") return kernel_check(ctx);
    if (command == "assemble-report") return assemble_report(ctx);
    if (command == "simulate") return simulate_cmd(ctx);
    if (command == "spectrum") return spectrum_cmd(ctx);
    if (command == "resolvent-scan") return scan_cmd(ctx);
    return decay_cmd(ctx);
  } catch (const ValidationError& e) {
    err << "error: " << command << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "error: " << command << ": numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << command << ": " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace ptl
