#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "frictuner/experiments.hpp"

namespace {

using frictuner::ExperimentConfig;

void add_common_flags(CLI::App* sub, ExperimentConfig& cfg, std::string& preset_name,
                      std::string& config_path, std::string& opt_mode) {
  sub->add_option("--preset", preset_name, "preset name (see preset-list)");
  sub->add_option("--config", config_path, "key=value config file");
  sub->add_option("--seed", cfg.seed, "random seed");
  sub->add_option("--out", cfg.out_dir, "output directory");
  sub->add_option("--epochs", cfg.opt.epochs, "total integrator steps");
  sub->add_option("--gamma", cfg.gamma,
                  "friction: number | diag:v1,..,vn | file:path | sigma-inv-half");
  sub->add_option("--mode", opt_mode, "constraint mode: full | diagonal | scalar");
  sub->add_option("--chains", cfg.chains, "independent seeded replicas");
  sub->add_option("--csv", cfg.csv_path, "logistic-csv feature file");
  sub->add_option("--label", cfg.csv_label, "logistic-csv label column");
  sub->add_option("--minibatch", cfg.opt.minibatch, "minibatch size (0 = full)");
  sub->add_option("--dynamics", cfg.dynamics,
                  "sample/benchmark dynamics: baoab | overdamped | irreversible");
  sub->add_option("--galerkin-k", cfg.galerkin_k, "Hermite degree per coordinate");
  sub->add_flag("--dump-matrices", cfg.dump_matrices,
                "dump generator matrix and solution coefficients");
}

int dispatch(const std::string& mode, const std::string& preset_name,
             const std::string& config_path, const std::string& opt_mode,
             const ExperimentConfig& flags, const CLI::App* sub) {
  ExperimentConfig cfg = preset_name.empty() ? ExperimentConfig{} : frictuner::preset(preset_name);
  cfg.mode = mode;
  if (!config_path.empty()) frictuner::apply_config_file(config_path, cfg);
  // Flags win over preset and config file: copy only what the user set.
  if (sub->count("--seed")) cfg.seed = flags.seed;
  if (sub->count("--out")) cfg.out_dir = flags.out_dir;
  if (sub->count("--epochs")) cfg.opt.epochs = flags.opt.epochs;
  if (sub->count("--gamma")) cfg.gamma = flags.gamma;
  if (sub->count("--chains")) cfg.chains = flags.chains;
  if (sub->count("--csv")) cfg.csv_path = flags.csv_path;
  if (sub->count("--label")) cfg.csv_label = flags.csv_label;
  if (sub->count("--minibatch")) cfg.opt.minibatch = flags.opt.minibatch;
  if (sub->count("--dynamics")) cfg.dynamics = flags.dynamics;
  if (sub->count("--galerkin-k")) cfg.galerkin_k = flags.galerkin_k;
  if (sub->count("--dump-matrices")) cfg.dump_matrices = flags.dump_matrices;
  if (sub->count("--mode")) {
    if (opt_mode == "full") cfg.opt.mode = frictuner::OptConfig::Mode::full;
    else if (opt_mode == "diagonal") cfg.opt.mode = frictuner::OptConfig::Mode::diagonal;
    else if (opt_mode == "scalar") cfg.opt.mode = frictuner::OptConfig::Mode::scalar;
    else throw frictuner::ConfigError("unknown --mode " + opt_mode);
  }
  return frictuner::run(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frictuner: friction-matrix tuning for underdamped Langevin sampling"};
  app.require_subcommand(1);

  ExperimentConfig flags;
  std::string preset_name, config_path, opt_mode;

  CLI::App* optimize = app.add_subcommand("optimize", "adaptive Gamma optimization");
  CLI::App* sample = app.add_subcommand("sample", "fixed-Gamma sampling run");
  CLI::App* galerkin = app.add_subcommand("galerkin", "spectral Poisson solve");
  CLI::App* benchmark = app.add_subcommand("benchmark", "fixed-Gamma variance benchmark");
  CLI::App* list = app.add_subcommand("preset-list", "list presets");
  for (CLI::App* sub : {optimize, sample, galerkin, benchmark}) {
    add_common_flags(sub, flags, preset_name, config_path, opt_mode);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list->parsed()) {
      for (const auto& name : frictuner::preset_names()) {
        std::cout << name << "\n";
      }
      return 0;
    }
    for (CLI::App* sub : {optimize, sample, galerkin, benchmark}) {
      if (sub->parsed()) {
        return dispatch(sub->get_name(), preset_name, config_path, opt_mode, flags, sub);
      }
    }
    return 2;
  } catch (const frictuner::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const frictuner::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const frictuner::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const frictuner::UnsupportedError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return 2;
  } catch (const frictuner::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const frictuner::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
