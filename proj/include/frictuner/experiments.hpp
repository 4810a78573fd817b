#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "frictuner/friction_opt.hpp"

namespace frictuner {

inline constexpr const char* kVersion = "frictuner 0.1.0";

/// Everything a run depends on; serialized verbatim into run_manifest.json.
struct ExperimentConfig {
  std::string mode = "optimize";  // optimize | sample | galerkin | benchmark
  std::string preset;

  // target
  std::string target = "gaussian1d";  // gaussian1d | bridge | logistic-synthetic
                                      // | logistic-csv | doublewell
  double v0 = 5.0;
  int bridge_n = 20;
  double bridge_delta = 1.0 / 21.0;
  int synth_n = 20;
  int synth_p = 500;
  std::string csv_path;
  std::string csv_label;

  // observable
  std::string observable = "quad";  // quad | linear | quartic | norm2 | coords

  OptConfig opt;

  // fixed-Gamma runs
  std::string gamma = "identity";  // number | diag:v1,..,vn | file:path |
                                   // sigma-inv-half | identity
  std::string dynamics = "baoab";  // baoab | overdamped | irreversible

  // galerkin
  int galerkin_k = 8;
  bool dump_matrices = false;

  // block-averaged variance
  long block_T = 300;
  int block_NB = 99;

  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int chains = 1;
};

/// Paper-faithful preset registry:
/// quad1d, lin1d, quartic1d, bridge, logistic-synthetic, logistic-csv,
/// doublewell. Unknown names raise a config error listing the registry.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Strict flat key=value config file with [section] headers; unknown keys are
/// rejected.
void apply_config_file(const std::string& path, ExperimentConfig& cfg);

/// Executes the experiment, writing gamma_trajectory.csv, variance_table.csv,
/// diagnostics.json and run_manifest.json under cfg.out_dir.
/// Returns 0 on success, 3 when a chain diverged (partial artifacts kept).
int run(const ExperimentConfig& cfg);

TargetPtr make_target(const ExperimentConfig& cfg);
ObservableSet make_observables(const ExperimentConfig& cfg, const Target& t);
FrictionMatrix make_gamma(const ExperimentConfig& cfg, const Target& t);

}  // namespace frictuner
