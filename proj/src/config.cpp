// SPDX-License-Identifier: Apache-2.0
#include "ptl/config.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace ptl {
namespace {

using json = nlohmann::ordered_json;

struct Entry {
  ConfigKey doc;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ValidationError(path + " must be a number");
  return v.get<double>();
}

long long as_integer(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == static_cast<double>(static_cast<long long>(d))) return static_cast<long long>(d);
  }
  throw ValidationError(path + " must be an integer");
}

int as_int(const json& v, const std::string& path) {
  const long long n = as_integer(v, path);
  if (n < -2147483647LL || n > 2147483647LL) throw ValidationError(path + " is out of range");
  return static_cast<int>(n);
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ValidationError(path + " must be a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ValidationError(path + " must be a boolean");
  return v.get<bool>();
}

std::vector<KernelTerm> as_terms(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ValidationError(path + " must be a non-empty array of {amplitude, rate}");
  std::vector<KernelTerm> terms;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_object()) throw ValidationError(at + " must be an object");
    for (const auto& [key, _] : v[i].items())
      if (key != "amplitude" && key != "rate") throw ValidationError("unknown config key '" + at + "." + key + "'");
    if (!v[i].contains("amplitude") || !v[i].contains("rate"))
      throw ValidationError(at + " needs both amplitude and rate");
    terms.push_back({as_number(v[i]["amplitude"], at + ".amplitude"), as_number(v[i]["rate"], at + ".rate")});
  }
  return terms;
}

#define PTL_NUM(path, field, desc)                                                                   \
  Entry {                                                                                            \
    {path, "number", desc, ""}, [](RunConfig& c, const json& v) { c.field = as_number(v, path); }, \
        [](const RunConfig& c) { return json(c.field); }                                             \
  }
#define PTL_INT(path, field, desc)                                                                   \
  Entry {                                                                                            \
    {path, "integer", desc, ""}, [](RunConfig& c, const json& v) { c.field = as_int(v, path); },   \
        [](const RunConfig& c) { return json(c.field); }                                             \
  }
#define PTL_STR(path, field, desc)                                                                   \
  Entry {                                                                                            \
    {path, "string", desc, ""}, [](RunConfig& c, const json& v) { c.field = as_string(v, path); }, \
        [](const RunConfig& c) { return json(c.field); }                                             \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t{
        PTL_NUM("params.rho", params.rho, "mass density, > 0"),
        PTL_NUM("params.mu", params.mu, "elastic modulus, > 0"),
        PTL_NUM("params.gamma", params.gamma, "strain-porosity coupling, gamma^2 < mu xi"),
        PTL_NUM("params.beta", params.beta, "thermal coupling, != 0"),
        PTL_NUM("params.J", params.J, "equilibrated inertia, > 0"),
        PTL_NUM("params.b", params.b, "porous gradient modulus, > 0"),
        PTL_NUM("params.m", params.m, "porosity-temperature coupling, m^2 < b k"),
        PTL_NUM("params.xi", params.xi, "porous stiffness, > 0"),
        PTL_NUM("params.d", params.d, "porous thermal coupling"),
        PTL_NUM("params.a", params.a, "thermal capacity, > 0"),
        PTL_NUM("params.k", params.k, "type II conductivity, > 0"),
        PTL_NUM("profile.mu0", profile.mu0, "memory coefficient on the damped region, > 0"),
        PTL_NUM("profile.tau", profile.tau, "end of the damped region, in (0, pi)"),
        PTL_NUM("profile.ramp_width", profile.ramp_width, "smooth_ramp transition width, in (0, tau]"),
        Entry{{"profile.shape", "string", "jump | smooth_ramp | off (off: no memory damping)", ""},
              [](RunConfig& c, const json& v) {
                c.profile.shape = profile_shape_from_string(as_string(v, "profile.shape"));
              },
              [](const RunConfig& c) { return json(to_string(c.profile.shape)); }},
        Entry{{"kernel.terms", "array", "exponential sum g(s) = sum amplitude exp(-rate s); items {amplitude, rate}",
               ""},
              [](RunConfig& c, const json& v) { c.kernel_terms = as_terms(v, "kernel.terms"); },
              [](const RunConfig& c) {
                json a = json::array();
                for (const auto& term : c.kernel_terms) a.push_back({{"amplitude", term.amplitude}, {"rate", term.rate}});
                return a;
              }},
        PTL_NUM("kernel.tail_tol", tail_tol, "memory horizon picks g(s_max) <= tail_tol g(0)"),
        PTL_NUM("kernel.s_max", s_max, "explicit memory horizon; 0 derives it from tail_tol"),
        PTL_INT("grids.n_x", n_x, "interior spatial nodes, >= 3"),
        PTL_INT("grids.n_s", n_s, "memory nodes including s = 0, >= 2"),
        PTL_NUM("grids.grading_ratio", grading_ratio, "last over first memory interval, >= 1"),
        Entry{{"discretization.memory_weighting", "string", "mu_star | unweighted history norm", ""},
              [](RunConfig& c, const json& v) {
                c.discretization.memory_weighting =
                    memory_weighting_from_string(as_string(v, "discretization.memory_weighting"));
              },
              [](const RunConfig& c) { return json(to_string(c.discretization.memory_weighting)); }},
        PTL_NUM("discretization.support_threshold", discretization.support_threshold,
                "faces with averaged mu* at or below this carry no memory"),
        PTL_NUM("simulate.dt", simulate.dt, "time step; 0 selects 5e-3 pi / n_x"),
        PTL_NUM("simulate.T", simulate.T, "final time, > 0 (rounded to whole steps)"),
        Entry{{"simulate.preset", "string", "rest_history | memory_history | checkpoint", ""},
              [](RunConfig& c, const json& v) {
                c.simulate.preset = initial_preset_from_string(as_string(v, "simulate.preset"));
              },
              [](const RunConfig& c) { return json(to_string(c.simulate.preset)); }},
        PTL_STR("simulate.checkpoint", simulate.checkpoint, "checkpoint file read by the checkpoint preset"),
        PTL_INT("simulate.trace_every", simulate.trace_every, "record a trace row every this many steps, >= 1"),
        PTL_INT("simulate.snapshot_every", simulate.snapshot_every, "field snapshot cadence in steps; 0 disables"),
        PTL_NUM("simulate.monotone_tol", simulate.monotone_tol,
                "relative energy increase tolerated before a damped run aborts"),
        PTL_NUM("scan.lambda_min", scan.lambda_min, "first frequency, > 0"),
        PTL_NUM("scan.lambda_max", scan.lambda_max, "last frequency, > lambda_min"),
        PTL_INT("scan.points", scan.points, "log-spaced frequencies, >= 2"),
        PTL_NUM("scan.p", scan.p, "exponent in scaled_norm = lambda^-p norm"),
        PTL_INT("spectrum.count", spectrum.count, "eigenvalues nearest the shift; 0 computes all (dense sizes)"),
        PTL_NUM("spectrum.shift_re", spectrum.shift_re, "real part of the target shift"),
        PTL_NUM("spectrum.shift_im", spectrum.shift_im, "imaginary part of the target shift"),
        PTL_INT("spectrum.dense_limit", spectrum.dense_limit,
                "dense spectral algebra up to this many unknowns (also used by resolvent-scan)"),
        PTL_NUM("kernel_check.epsilon", kernel_check.epsilon, "lower end of the frequency band, > 0"),
        PTL_NUM("kernel_check.lambda_max", kernel_check.lambda_max, "upper end of the frequency band"),
        PTL_INT("kernel_check.lambda_points", kernel_check.lambda_points, "log-spaced frequencies in the band"),
        PTL_INT("kernel_check.quadrature_n_s", kernel_check.quadrature_n_s, "base memory nodes for the quadrature"),
        PTL_INT("assemble_report.samples", assemble_report.samples, "random states in the dissipativity sample"),
        Entry{{"assemble_report.export_matrices", "boolean", "write A, M, D as row col value triplets", ""},
              [](RunConfig& c, const json& v) {
                c.assemble_report.export_matrices = as_bool(v, "assemble_report.export_matrices");
              },
              [](const RunConfig& c) { return json(c.assemble_report.export_matrices); }},
        PTL_STR("decay.trace", decay.trace, "trace CSV to fit; empty reads <out>/trace.csv"),
        PTL_NUM("decay.t_lo", decay.t_lo, "window start, >= 1"),
        PTL_NUM("decay.t_hi", decay.t_hi, "window end; 0 selects T/3"),
        PTL_NUM("decay.graph_norm", decay.graph_norm,
                "normalizer ||U0||_M + ||A U0||_M; 0 reads simulate_summary.json beside the trace, else 1"),
        PTL_STR("output", out_dir, "output directory (overridden by --out)"),
        Entry{{"seed", "integer", "random seed, unsigned 64-bit (overridden by --seed)", ""},
              [](RunConfig& c, const json& v) {
                if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
                  throw ValidationError("seed must be a non-negative integer");
                c.seed = v.get<std::uint64_t>();
              },
              [](const RunConfig& c) { return json(c.seed); }},
        PTL_INT("threads", threads, "worker threads for resolvent-scan, >= 1 (overridden by --threads)"),
    };
    const RunConfig defaults;
    for (auto& e : t) e.doc.default_value = e.get(defaults).dump();
    return t;
  }();
  return table;
}

#undef PTL_NUM
#undef PTL_INT
#undef PTL_STR

const Entry* find_entry(const std::string& path) {
  for (const auto& e : entries())
    if (e.doc.path == path) return &e;
  return nullptr;
}

std::string block_of(const std::string& path) {
  const auto dot = path.find('.');
  return dot == std::string::npos ? path : path.substr(0, dot);
}

bool is_block(const std::string& name) {
  for (const auto& e : entries())
    if (e.doc.path.size() > name.size() && e.doc.path.compare(0, name.size() + 1, name + ".") == 0) return true;
  return false;
}

void set_key(RunConfig& config, const std::string& path, const json& value) {
  const Entry* e = find_entry(path);
  if (e == nullptr) throw ValidationError("unknown config key '" + path + "'");
  e->set(config, value);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back(e.doc);
    return out;
  }();
  return keys;
}

RunConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");

  RunConfig config;
  for (const auto& [name, value] : doc.items()) {
    if (is_block(name)) {
      if (!value.is_object()) throw ValidationError("config block '" + name + "' must be an object");
      for (const auto& [key, v] : value.items()) set_key(config, name + "." + key, v);
      config.blocks_present.insert(name);
    } else {
      set_key(config, name, value);
    }
  }
  return config;
}

void apply_env_overrides(RunConfig& config, const std::map<std::string, std::string>& env) {
  for (const auto& [name, text] : env) {
    if (name.rfind("PTL_", 0) != 0) continue;
    const auto sep = name.find("__", 4);
    if (sep == std::string::npos) continue;  // flag fallbacks such as PTL_OUT are handled by the CLI
    std::string path = name.substr(4, sep - 4) + "." + name.substr(sep + 2);
    std::transform(path.begin(), path.end(), path.begin(), [](unsigned char ch) { return std::tolower(ch); });
    // J is the only upper-case key
    if (path == "params.j") path = "params.J";
    if (path == "simulate.t") path = "simulate.T";
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    if (find_entry(path) == nullptr) throw ValidationError("unknown config key '" + path + "' from " + name);
    set_key(config, path, value);
  }
}

std::set<std::string> blocks_used_by(const std::string& subcommand) {
  if (subcommand == "kernel-check") return {"kernel", "kernel_check"};
  if (subcommand == "assemble-report")
    return {"params", "profile", "kernel", "grids", "discretization", "assemble_report"};
  if (subcommand == "simulate") return {"params", "profile", "kernel", "grids", "discretization", "simulate"};
  if (subcommand == "spectrum") return {"params", "profile", "kernel", "grids", "discretization", "spectrum"};
  if (subcommand == "resolvent-scan")
    return {"params", "profile", "kernel", "grids", "discretization", "scan", "spectrum"};
  if (subcommand == "decay-fit") return {"decay"};
  throw ValidationError("unknown subcommand '" + subcommand + "'");
}

MemoryKernel config_kernel(const RunConfig& config) {
  return make_kernel(config.kernel_terms, config.tail_tol, config.s_max);
}

Grids config_grids(const RunConfig& config, const MemoryKernel& kernel) {
  return build_grids(config.n_x, config.n_s, kernel.s_max, config.grading_ratio);
}

GeneratorAssembly config_assembly(const RunConfig& config) {
  const MemoryKernel kernel = config_kernel(config);
  return assemble_generator(config.params, config.profile, kernel, config_grids(config, kernel),
                            config.discretization);
}

void validate_config(const RunConfig& config, const std::string& subcommand) {
  const auto used = blocks_used_by(subcommand);
  std::vector<std::string> out;
  auto need = [&](bool ok, const std::string& message) {
    if (!ok) out.push_back(message);
  };
  need(config.threads >= 1, "threads must be at least 1");

  if (used.count("params")) {
    for (auto& v : param_violations(config.params)) out.push_back(std::move(v));
  }
  if (used.count("profile")) {
    try {
      validate_profile(config.profile);
    } catch (const ValidationError& e) {
      for (const auto& v : e.violations()) out.push_back(v);
    }
  }
  if (used.count("kernel")) {
    try {
      const MemoryKernel kernel = config_kernel(config);
      if (used.count("grids")) (void)config_grids(config, kernel);
    } catch (const ValidationError& e) {
      for (const auto& v : e.violations()) out.push_back(v);
    }
  }
  if (used.count("discretization"))
    need(config.discretization.support_threshold >= 0.0, "discretization.support_threshold must be >= 0");
  if (used.count("simulate")) {
    const auto& s = config.simulate;
    need(s.dt >= 0.0, "simulate.dt must be >= 0");
    need(s.T > 0.0, "simulate.T must be positive");
    need(s.trace_every >= 1, "simulate.trace_every must be at least 1");
    need(s.snapshot_every >= 0, "simulate.snapshot_every must be >= 0");
    need(s.monotone_tol >= 0.0, "simulate.monotone_tol must be >= 0");
    need(s.preset != InitialPreset::checkpoint || !s.checkpoint.empty(),
         "simulate.checkpoint must name a file for the checkpoint preset");
  }
  if (used.count("scan")) {
    const auto& s = config.scan;
    need(s.lambda_min > 0.0, "scan.lambda_min must be positive");
    need(s.lambda_max > s.lambda_min, "scan.lambda_max must exceed scan.lambda_min");
    need(s.points >= 2, "scan.points must be at least 2");
  }
  if (used.count("spectrum")) {
    need(config.spectrum.count >= 0, "spectrum.count must be >= 0");
    need(config.spectrum.dense_limit >= 1, "spectrum.dense_limit must be at least 1");
  }
  if (used.count("kernel_check")) {
    const auto& k = config.kernel_check;
    need(k.epsilon > 0.0, "kernel_check.epsilon must be positive");
    need(k.lambda_max >= k.epsilon, "kernel_check.lambda_max must be >= epsilon");
    need(k.lambda_points >= 1, "kernel_check.lambda_points must be at least 1");
    need(k.quadrature_n_s >= 2, "kernel_check.quadrature_n_s must be at least 2");
  }
  if (used.count("assemble_report")) need(config.assemble_report.samples >= 0, "assemble_report.samples must be >= 0");
  if (used.count("decay")) {
    need(config.decay.t_lo >= 1.0, "decay.t_lo must be >= 1");
    need(config.decay.t_hi == 0.0 || config.decay.t_hi > config.decay.t_lo, "decay.t_hi must be 0 or exceed t_lo");
    need(config.decay.graph_norm >= 0.0, "decay.graph_norm must be >= 0");
  }
  if (!out.empty()) throw ValidationError(std::move(out));
}

std::string config_schema() {
  json schema;
  schema["$schema"] = "https://json-schema.org/draft/2020-12/schema";
  schema["title"] = "ptl run configuration";
  schema["type"] = "object";
  schema["additionalProperties"] = false;
  json props = json::object();
  for (const auto& e : entries()) {
    json node;
    const auto& k = e.doc;
    node["type"] = k.type;
    node["description"] = k.description;
    node["default"] = json::parse(k.default_value);
    if (k.path == "kernel.terms") {
      node["minItems"] = 1;
      node["items"] = {{"type", "object"},
                       {"additionalProperties", false},
                       {"required", {"amplitude", "rate"}},
                       {"properties", {{"amplitude", {{"type", "number"}}}, {"rate", {{"type", "number"}}}}}};
    }
    const std::string block = block_of(k.path);
    if (block == k.path) {
      props[k.path] = node;
    } else {
      json& b = props[block];
      if (b.is_null()) b = {{"type", "object"}, {"additionalProperties", false}, {"properties", json::object()}};
      b["properties"][k.path.substr(block.size() + 1)] = node;
    }
  }
  schema["properties"] = props;
  return schema.dump(2) + "\n";
}

std::string config_help() {
  std::ostringstream os;
  os << "Config keys (JSON; unknown keys are errors; env override PTL_<BLOCK>__<KEY>=<json>):\n";
  std::size_t width = 0;
  for (const auto& k : config_keys()) width = std::max(width, k.path.size());
  for (const auto& k : config_keys()) {
    os << "  " << k.path << std::string(width - k.path.size() + 2, ' ') << k.description << " [default "
       << k.default_value << "]\n";
  }
  return os.str();
}

}  // namespace ptl
