// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptl/discretize.hpp"
#include "ptl/evolve.hpp"

namespace ptl {

struct SimulateBlock {
  double dt{0.0};  // 0 selects 5e-3 pi / n_x
  double T{10.0};
  InitialPreset preset{InitialPreset::rest_history};
  std::string checkpoint;  // input for the checkpoint preset
  int trace_every{1};
  int snapshot_every{0};
  double monotone_tol{1e-10};
};

struct ScanBlock {
  double lambda_min{1.0};
  double lambda_max{200.0};
  int points{60};
  double p{1.6};
};

struct SpectrumBlock {
  int count{0};  // 0: every eigenvalue (dense path only)
  double shift_re{0.0};
  double shift_im{0.0};
  int dense_limit{2000};
};

struct KernelCheckBlock {
  double epsilon{1.0};
  double lambda_max{100.0};
  int lambda_points{200};
  int quadrature_n_s{128};
};

struct AssembleReportBlock {
  int samples{1000};
  bool export_matrices{false};
};

struct DecayBlock {
  std::string trace;  // empty: <out>/trace.csv
  double t_lo{1.0};
  double t_hi{0.0};        // 0: T/3
  double graph_norm{0.0};  // 0: read from the simulate summary next to the trace, else 1
};

/// One document drives every subcommand. Defaults reproduce the damped reference preset.
struct RunConfig {
  PhysicalParams params;
  DampingProfile profile;
  std::vector<KernelTerm> kernel_terms{{1.0, 1.0}};
  double tail_tol{1e-8};
  double s_max{0.0};  // 0: chosen from tail_tol
  int n_x{40};
  int n_s{16};
  double grading_ratio{40.0};
  DiscretizationOptions discretization;
  SimulateBlock simulate;
  ScanBlock scan;
  SpectrumBlock spectrum;
  KernelCheckBlock kernel_check;
  AssembleReportBlock assemble_report;
  DecayBlock decay;
  std::string out_dir{"out"};
  std::uint64_t seed{0};
  int threads{1};

  std::set<std::string> blocks_present;  // top-level blocks named in the parsed document
};

struct ConfigKey {
  std::string path;  // block.key, or key for top-level scalars
  std::string type;  // number, integer, string, boolean, array
  std::string description;
  std::string default_value;  // JSON text
};

/// Every recognized key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Parses a JSON document. Unknown keys, wrong types and malformed JSON raise ValidationError.
RunConfig parse_config(const std::string& json_text);

/// Applies PTL_<BLOCK>__<KEY> overrides (e.g. PTL_GRIDS__N_X=60); values are JSON literals,
/// or plain strings when they do not parse. Unknown override names raise ValidationError.
void apply_env_overrides(RunConfig& config, const std::map<std::string, std::string>& env);

/// Runs the owning module's validation on every block the subcommand uses.
void validate_config(const RunConfig& config, const std::string& subcommand);

/// Top-level blocks a subcommand reads.
std::set<std::string> blocks_used_by(const std::string& subcommand);

MemoryKernel config_kernel(const RunConfig& config);
Grids config_grids(const RunConfig& config, const MemoryKernel& kernel);
GeneratorAssembly config_assembly(const RunConfig& config);

/// JSON Schema (draft 2020-12) for the config document.
std::string config_schema();

/// Human-readable key listing for --help.
std::string config_help();

}  // namespace ptl
