// SPDX-License-Identifier: Apache-2.0
#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ptl/analysis.hpp"
#include "ptl/cli.hpp"
#include "ptl/config.hpp"
#include "ptl/io.hpp"
#include "ptl/kernel_lab.hpp"
#include "ptl/spectra.hpp"

namespace py = pybind11;
using namespace ptl;

namespace {

// Row, column and value arrays of a sparse matrix.
py::tuple triplets(const SparseMatrix& S) {
  std::vector<int> rows, cols;
  std::vector<double> vals;
  for (int k = 0; k < S.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(S, k); it; ++it) {
      rows.push_back(static_cast<int>(it.row()));
      cols.push_back(static_cast<int>(it.col()));
      vals.push_back(it.value());
    }
  return py::make_tuple(py::array(py::cast(rows)), py::array(py::cast(cols)), py::array(py::cast(vals)));
}

/// One assembled configuration with a lazily built spectral context.
class Model {
 public:
  explicit Model(RunConfig config) : config_(std::move(config)), assembly_(config_assembly(config_)) {}

  static Model from_json(const std::string& text) { return Model(parse_config(text)); }

  const GeneratorAssembly& assembly() const { return assembly_; }

  const SpectralContext& spectral() {
    if (!spectral_) {
      SpectralOptions opt;
      opt.dense_limit = config_.spectrum.dense_limit;
      spectral_ = std::make_unique<SpectralContext>(assembly_, opt);
    }
    return *spectral_;
  }

  py::dict simulate(double T, double dt, const std::string& preset, int trace_every) {
    SimulationOptions opt;
    opt.T = T;
    opt.dt = dt > 0.0 ? dt : default_dt(assembly_.grids);
    opt.trace_every = trace_every;
    const auto U0 = preset_state(assembly_, initial_preset_from_string(preset)).pack(assembly_.layout);
    SimulationTrace tr;
    {
      py::gil_scoped_release release;
      tr = ptl::simulate(assembly_, U0, opt);
    }
    py::dict d;
    d["t"] = py::array(py::cast(tr.times));
    d["E"] = py::array(py::cast(tr.energies));
    d["norm"] = py::array(py::cast(tr.norms));
    d["diss_rate"] = py::array(py::cast(tr.dissipation_rates));
    d["initial_graph_norm"] = tr.initial_graph_norm;
    d["dt"] = tr.dt;
    d["steps"] = tr.steps;
    d["final_state"] = tr.final_state;
    return d;
  }

 private:
  RunConfig config_;
  GeneratorAssembly assembly_;
  std::unique_ptr<SpectralContext> spectral_;
};

py::dict certificate_dict(const KernelCertificate& c) {
  py::dict d;
  d["h1_ok"] = c.h1_ok;
  d["h2_ok"] = c.h2_ok;
  d["failures"] = c.failures;
  d["K_min"] = c.K_h2;
  d["ratio_sup"] = c.ratio_sup;
  d["ratio_sup_at"] = c.ratio_sup_at;
  d["epsilon"] = c.epsilon;
  d["delta"] = c.delta;
  d["lambda_max"] = c.lambda_max;
  d["lambda_points"] = c.lambda_points;
  d["max_nodes_used"] = c.max_nodes_used;
  d["tail_bound"] = c.tail_bound;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ptl, m) {
  m.doc() = "Porous thermoelastic rod with local memory damping";

  static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    }
  });

  m.def(
      "run",
      [](const std::vector<std::string>& args, const std::map<std::string, std::string>& env) {
        std::ostringstream out, err;
        std::vector<std::string> argv{"ptl"};
        argv.insert(argv.end(), args.begin(), args.end());
        int code;
        {
          py::gil_scoped_release release;
          code = ptl::run(argv, env, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), py::arg("env") = std::map<std::string, std::string>{},
      "Runs the command-line tool in process; returns (exit_code, stdout, stderr).");

  m.def("config_schema", &config_schema);
  m.def(
      "param_violations",
      [](const std::map<std::string, double>& values) {
        RunConfig c;
        py::dict params;
        for (const auto& [k, v] : values) params[py::str(k)] = v;
        std::ostringstream doc;
        doc << "{\"params\": " << py::str(py::module_::import("json").attr("dumps")(params)).cast<std::string>() << "}";
        c = parse_config(doc.str());
        return param_violations(c.params);
      },
      py::arg("params"), "Violated admissibility constraints for a partial parameter set (others take defaults).");

  m.def(
      "certify_kernel",
      [](const std::vector<std::pair<double, double>>& terms, double epsilon, double lambda_max, int lambda_points,
         double tail_tol, int n_s) {
        std::vector<KernelTerm> t;
        for (const auto& [a, r] : terms) t.push_back({a, r});
        const MemoryKernel k = make_kernel(t, tail_tol);
        return certificate_dict(certify_kernel(k, build_grids(3, n_s, k.s_max, 40.0), epsilon, lambda_max, lambda_points));
      },
      py::arg("terms"), py::arg("epsilon") = 1.0, py::arg("lambda_max") = 100.0, py::arg("lambda_points") = 200,
      py::arg("tail_tol") = 1e-8, py::arg("n_s") = 128,
      "Sign checks, convexity constants and the frequency bound for sum a_i exp(-r_i s), terms as (a_i, r_i).");

  m.def(
      "decay_fit",
      [](const std::vector<double>& t, const std::vector<double>& norms, double graph_norm, double t_lo,
         double t_hi) {
        const DecayFit f = ptl::decay_fit(t, norms, graph_norm, {t_lo, t_hi});
        py::dict d;
        d["alpha"] = f.alpha;
        d["log_constant"] = f.log_constant;
        d["r_squared"] = f.r_squared;
        d["t_lo"] = f.t_lo;
        d["t_hi"] = f.t_hi;
        d["samples"] = f.samples;
        return d;
      },
      py::arg("t"), py::arg("norms"), py::arg("graph_norm") = 1.0, py::arg("t_lo") = 1.0, py::arg("t_hi") = 0.0);

  py::class_<Model>(m, "Model")
      .def(py::init([]() { return Model(RunConfig{}); }), "Damped reference preset.")
      .def_static("from_json", &Model::from_json, py::arg("text"))
      .def_property_readonly("size", [](const Model& s) { return s.assembly().size(); })
      .def_property_readonly("damped", [](const Model& s) { return s.assembly().damped(); })
      .def_property_readonly("x", [](const Model& s) { return s.assembly().grids.x; })
      .def_property_readonly("s", [](const Model& s) { return s.assembly().grids.s_nodes; })
      .def("matrix", [](const Model& s, const std::string& name) {
        const auto& a = s.assembly();
        if (name == "A") return triplets(a.A);
        if (name == "M") return triplets(a.M);
        if (name == "D") return triplets(a.D);
        throw ValidationError("matrix name must be A, M or D");
      }, py::arg("name"), "Coordinate triplets (rows, cols, values) of A, M or D.")
      .def("preset_state", [](const Model& s, const std::string& preset) {
        return preset_state(s.assembly(), initial_preset_from_string(preset)).pack(s.assembly().layout);
      }, py::arg("preset") = "rest_history")
      .def("energy", [](const Model& s, const ComplexVector& U) { return discrete_energy(s.assembly(), U); })
      .def("energy_production", [](const Model& s, const ComplexVector& U) { return energy_production(s.assembly(), U); })
      .def("eigenvalues", [](Model& s, int count, std::complex<double> shift) {
        std::vector<std::complex<double>> out;
        for (const auto& p : s.spectral().eigenvalues(count, shift)) out.push_back(p.value);
        return py::array(py::cast(out));
      }, py::arg("count") = 0, py::arg("shift") = std::complex<double>{0.0, 0.0})
      .def("resolvent_norm", [](Model& s, double lambda) { return s.spectral().resolvent_norm(lambda); })
      .def("resolvent_scan", [](Model& s, double lo, double hi, int n, int threads, double p) {
        const SpectralContext& ctx = s.spectral();
        ResolventScan r;
        {
          py::gil_scoped_release release;
          r = resolvent_scan(ctx, lo, hi, n, threads, p);
        }
        py::dict d;
        d["lambda"] = py::array(py::cast(r.lambdas));
        d["norm"] = py::array(py::cast(r.norms));
        d["scaled_norm"] = py::array(py::cast(r.scaled));
        d["fit_exponent"] = r.fit_exponent;
        d["sup_scaled"] = r.sup_scaled;
        return d;
      }, py::arg("lambda_min") = 1.0, py::arg("lambda_max") = 200.0, py::arg("points") = 60, py::arg("threads") = 1,
         py::arg("p") = 1.6)
      .def("simulate", &Model::simulate, py::arg("T"), py::arg("dt") = 0.0, py::arg("preset") = "rest_history",
           py::arg("trace_every") = 1);
}
