#include "frictuner/experiments.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "frictuner/galerkin.hpp"
#include "frictuner/variance.hpp"

namespace frictuner {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int thread_cap() {
  if (const char* env = std::getenv("FRICTUNER_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct CsvWriter {
  std::ofstream out;
  explicit CsvWriter(const std::string& path) : out(path) {
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "# schema=1\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
    if (!out) throw IoError("write failure");
  }
};

}  // namespace

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "quad1d") {
    c.target = "gaussian1d";
    c.v0 = 5.0;
    c.observable = "quad";
    c.opt.dt = 0.08;
    c.opt.T = 125;
    c.opt.B = 100;
    c.opt.L = 1;
    c.opt.G = 1;
    c.opt.D_conv = 2e-4;
    c.opt.alpha = 1.0;
    c.opt.r = 0.5;
    c.opt.mu = 0.2;
    c.opt.update = OptConfig::Update::heavy_ball;
    c.opt.epochs = 50000;
    c.block_T = 300;
    c.block_NB = 99;
  } else if (name == "lin1d") {
    c = preset("quad1d");
    c.preset = name;
    c.observable = "linear";
  } else if (name == "quartic1d") {
    c = preset("quad1d");
    c.preset = name;
    c.v0 = 1.0;
    c.observable = "quartic";
    c.opt.alpha = 0.02;
    c.opt.r = 1.0;
    c.opt.epochs = 200000;
    c.opt.gamma0 = 3.0 * Mat::Identity(1, 1);
  } else if (name == "bridge") {
    c.target = "bridge";
    c.bridge_n = 20;
    c.bridge_delta = 1.0 / 21.0;
    c.observable = "norm2";
    c.opt.dt = 0.05;
    c.opt.T = 60;
    c.opt.B = 100;
    c.opt.L = 5;
    c.opt.G = 5;
    c.opt.D_conv = 0.01;
    c.opt.alpha = 0.2;
    c.opt.r = 1.0;
    c.opt.mu = 0.2;
    c.opt.mode = OptConfig::Mode::diagonal;
    c.opt.update = OptConfig::Update::heavy_ball;
    c.opt.epochs = 300000;
    c.block_T = 300;
    c.block_NB = 999;
  } else if (name == "logistic-synthetic" || name == "logistic-csv") {
    c.target = name;
    c.observable = "coords";
    c.opt.dt = 0.1;
    c.opt.T = 100;
    c.opt.B = 100;
    c.opt.L = 1;
    c.opt.G = 1;
    c.opt.K = 1;
    c.opt.D_conv = 0.01;
    c.opt.alpha = 0.1;
    c.opt.r = 1.0;
    c.opt.mu = 0.2;
    c.opt.update = OptConfig::Update::heavy_ball;
    c.opt.epochs = 30000;
    c.opt.hessian_free = true;
    c.block_T = 300;
    c.block_NB = 99;
  } else if (name == "doublewell") {
    c.target = "doublewell";
    c.observable = "linear";
    c.opt.dt = 0.08;
    c.opt.T = 125;
    c.opt.B = 100;
    c.opt.D_conv = 2e-4;
    c.opt.alpha = 0.5;
    c.opt.r = 0.5;
    c.opt.mu = 0.2;
    c.opt.update = OptConfig::Update::heavy_ball;
    c.opt.epochs = 20000;
  } else {
    std::string names;
    for (const auto& p : preset_names()) names += p + " ";
    throw ConfigError("unknown preset '" + name + "'; available: " + names);
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"quad1d",  "lin1d",        "quartic1d", "bridge",
          "logistic-synthetic", "logistic-csv", "doublewell"};
}

TargetPtr make_target(const ExperimentConfig& cfg) {
  if (cfg.target == "gaussian1d") {
    if (cfg.v0 <= 0.0) throw ConfigError("gaussian1d: v0 must be positive");
    return std::make_shared<GaussianTarget>(SymMatrix(cfg.v0 * Mat::Identity(1, 1)));
  }
  if (cfg.target == "bridge") {
    return std::make_shared<BridgeTarget>(cfg.bridge_n, cfg.bridge_delta);
  }
  if (cfg.target == "doublewell") {
    return std::make_shared<DoubleWellTarget>();
  }
  if (cfg.target == "logistic-synthetic") {
    RngStream rng(cfg.seed, 9000);
    auto base = make_synthetic_logistic(cfg.synth_n, cfg.synth_p, rng);
    if (cfg.opt.minibatch > 0) {
      return std::make_shared<LogisticTarget>(base.with_minibatch_scale(cfg.opt.minibatch));
    }
    return std::make_shared<LogisticTarget>(std::move(base));
  }
  if (cfg.target == "logistic-csv") {
    if (cfg.csv_path.empty() || cfg.csv_label.empty()) {
      throw ConfigError("logistic-csv: --csv and --label are required");
    }
    auto base = ingest_csv(cfg.csv_path, cfg.csv_label);
    if (cfg.opt.minibatch > 0) {
      return std::make_shared<LogisticTarget>(base.with_minibatch_scale(cfg.opt.minibatch));
    }
    return std::make_shared<LogisticTarget>(std::move(base));
  }
  throw ConfigError("unknown target '" + cfg.target + "'");
}

ObservableSet make_observables(const ExperimentConfig& cfg, const Target& t) {
  const int n = t.dim();
  if (cfg.observable == "quad") {
    return ObservableSet::single(
        quadratic_observable(SymMatrix(Mat::Identity(n, n)), Vec::Zero(n)));
  }
  if (cfg.observable == "linear") {
    return ObservableSet::single(linear_observable(Vec::Ones(n)));
  }
  if (cfg.observable == "quartic") {
    if (n != 1) throw ConfigError("quartic observable is one-dimensional");
    return ObservableSet::single(quartic_observable());
  }
  if (cfg.observable == "norm2") {
    return ObservableSet::single(norm_squared_observable(n));
  }
  if (cfg.observable == "coords") {
    return ObservableSet::coordinates(n);
  }
  throw ConfigError("unknown observable '" + cfg.observable + "'");
}

FrictionMatrix make_gamma(const ExperimentConfig& cfg, const Target& t) {
  const int n = t.dim();
  const double mu = cfg.opt.mu;
  const std::string& spec = cfg.gamma;
  if (spec == "identity") {
    return project_pd(SymMatrix(Mat::Identity(n, n)), mu);
  }
  if (spec == "sigma-inv-half") {
    const auto* g = dynamic_cast<const GaussianTarget*>(&t);
    if (!g) throw ConfigError("gamma sigma-inv-half requires a Gaussian target");
    return project_pd(symmetrize(g->precision_power(0.5)), mu);
  }
  if (spec.rfind("diag:", 0) == 0) {
    std::stringstream ss(spec.substr(5));
    std::vector<double> vals;
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != n) {
      throw ConfigError("gamma diag: expected " + std::to_string(n) + " values");
    }
    Mat m = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = vals[i];
    return project_pd(SymMatrix(m), mu);
  }
  if (spec.rfind("file:", 0) == 0) {
    const std::string path = spec.substr(5);
    std::ifstream in(path);
    if (!in) throw IoError("gamma file: cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> row;
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
      rows.push_back(row);
    }
    if (static_cast<int>(rows.size()) != n) {
      throw ConfigError("gamma file: expected " + std::to_string(n) + " rows");
    }
    Mat m(n, n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != n) {
        throw ConfigError("gamma file: ragged rows");
      }
      for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return project_pd(symmetrize(m), mu);
  }
  try {
    size_t pos = 0;
    const double v = std::stod(spec, &pos);
    if (pos == spec.size()) {
      return project_pd(SymMatrix(v * Mat::Identity(n, n)), mu);
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("cannot parse gamma spec '" + spec + "'");
}

namespace {

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["version"] = kVersion;
  j["mode"] = c.mode;
  j["preset"] = c.preset;
  j["target"] = c.target;
  j["v0"] = c.v0;
  j["bridge_n"] = c.bridge_n;
  j["bridge_delta"] = c.bridge_delta;
  j["synth_n"] = c.synth_n;
  j["synth_p"] = c.synth_p;
  j["csv_path"] = c.csv_path;
  j["csv_label"] = c.csv_label;
  j["observable"] = c.observable;
  j["gamma"] = c.gamma;
  j["dynamics"] = c.dynamics;
  j["galerkin_k"] = c.galerkin_k;
  j["block_T"] = c.block_T;
  j["block_NB"] = c.block_NB;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["chains"] = c.chains;
  json o;
  o["dt"] = c.opt.dt;
  o["T"] = c.opt.T;
  o["B"] = c.opt.B;
  o["L"] = c.opt.L;
  o["G"] = c.opt.G;
  o["K"] = c.opt.K;
  o["D_conv"] = c.opt.D_conv;
  o["alpha"] = c.opt.alpha;
  o["r"] = c.opt.r;
  o["mu"] = c.opt.mu;
  o["mode"] = c.opt.mode == OptConfig::Mode::full      ? "full"
              : c.opt.mode == OptConfig::Mode::diagonal ? "diagonal"
                                                        : "scalar";
  o["update"] = c.opt.update == OptConfig::Update::gd ? "gd" : "heavy_ball";
  o["epochs"] = c.opt.epochs;
  o["hessian_free"] = c.opt.hessian_free;
  o["alpha_decay"] = c.opt.alpha_decay;
  o["minibatch"] = c.opt.minibatch;
  if (c.opt.gamma0.size() != 0) {
    std::vector<double> g0(c.opt.gamma0.data(),
                           c.opt.gamma0.data() + c.opt.gamma0.size());
    o["gamma0"] = g0;
  }
  j["opt"] = o;
  return j;
}

void write_manifest(const ExperimentConfig& cfg) {
  std::ofstream out(cfg.out_dir + "/run_manifest.json");
  if (!out) throw IoError("cannot write run_manifest.json");
  out << config_to_json(cfg).dump(2) << "\n";
}

void write_diagnostics(const ExperimentConfig& cfg, const json& extra) {
  std::ofstream out(cfg.out_dir + "/diagnostics.json");
  if (!out) throw IoError("cannot write diagnostics.json");
  out << extra.dump(2) << "\n";
}

struct ChainOutputs {
  OptimizerResult opt;
  BlockEstimate block;
  bool diverged = false;
  long diverged_epoch = 0;
};

// Rows of the trajectory CSV: epoch then Gamma entries (row-major, or the
// diagonal in diagonal mode).
void write_gamma_trajectory(const ExperimentConfig& cfg,
                            const std::vector<ChainOutputs>& chains) {
  CsvWriter w(cfg.out_dir + "/gamma_trajectory.csv");
  const bool diag_only = cfg.opt.mode == OptConfig::Mode::diagonal;
  const auto& first = chains.front().opt.gamma_trajectory;
  const int n = first.empty() ? 0 : static_cast<int>(first.front().second.rows());

  std::vector<std::string> head{"epoch"};
  const int entries = diag_only ? n : n * n;
  for (int e = 0; e < entries; ++e) {
    const int i = diag_only ? e : e / n;
    const int j = diag_only ? e : e % n;
    std::string base = "g" + std::to_string(i) + "_" + std::to_string(j);
    if (chains.size() > 1) {
      head.push_back(base + "_mean");
      head.push_back(base + "_stderr");
    } else {
      head.push_back(base);
    }
  }
  w.row(head);

  size_t rows = first.size();
  for (const auto& c : chains) rows = std::min(rows, c.opt.gamma_trajectory.size());
  for (size_t r = 0; r < rows; ++r) {
    std::vector<std::string> cells{std::to_string(first[r].first)};
    for (int e = 0; e < entries; ++e) {
      const int i = diag_only ? e : e / n;
      const int j = diag_only ? e : e % n;
      double mean = 0.0;
      for (const auto& c : chains) mean += c.opt.gamma_trajectory[r].second(i, j);
      mean /= static_cast<double>(chains.size());
      if (chains.size() > 1) {
        double var = 0.0;
        for (const auto& c : chains) {
          const double d = c.opt.gamma_trajectory[r].second(i, j) - mean;
          var += d * d;
        }
        var /= static_cast<double>(chains.size() - 1);
        cells.push_back(fmt17(mean));
        cells.push_back(fmt17(std::sqrt(var / chains.size())));
      } else {
        cells.push_back(fmt17(mean));
      }
    }
    w.row(cells);
  }
}

void write_fixed_gamma_row(const ExperimentConfig& cfg, const Mat& gamma) {
  CsvWriter w(cfg.out_dir + "/gamma_trajectory.csv");
  const int n = static_cast<int>(gamma.rows());
  std::vector<std::string> head{"epoch"};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      head.push_back("g" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  w.row(head);
  std::vector<std::string> cells{"0"};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) cells.push_back(fmt17(gamma(i, j)));
  }
  w.row(cells);
}

void write_variance_table(const ExperimentConfig& cfg,
                          const std::vector<Vec>& sigma2_per_chain,
                          const std::string& estimator) {
  CsvWriter w(cfg.out_dir + "/variance_table.csv");
  const int n_obs = static_cast<int>(sigma2_per_chain.front().size());
  if (sigma2_per_chain.size() > 1) {
    w.row({"observable", "sigma2_mean", "sigma2_stderr", "estimator", "n_blocks",
           "block_len", "dt"});
  } else {
    w.row({"observable", "sigma2_approx", "estimator", "n_blocks", "block_len", "dt"});
  }
  for (int o = 0; o < n_obs; ++o) {
    double mean = 0.0;
    for (const auto& s : sigma2_per_chain) mean += s[o];
    mean /= static_cast<double>(sigma2_per_chain.size());
    std::vector<std::string> cells{std::to_string(o), fmt17(mean)};
    if (sigma2_per_chain.size() > 1) {
      double var = 0.0;
      for (const auto& s : sigma2_per_chain) var += (s[o] - mean) * (s[o] - mean);
      var /= static_cast<double>(sigma2_per_chain.size() - 1);
      cells.push_back(fmt17(std::sqrt(var / sigma2_per_chain.size())));
    }
    cells.push_back(estimator);
    cells.push_back(std::to_string(cfg.block_NB));
    cells.push_back(std::to_string(cfg.block_T));
    cells.push_back(fmt17(cfg.opt.dt));
    w.row(cells);
  }
}

void write_proxy_series(const ExperimentConfig& cfg, const OptimizerResult& res) {
  CsvWriter w(cfg.out_dir + "/proxy_series.csv");
  const int n_obs = res.proxy_series.empty()
                        ? 0
                        : static_cast<int>(res.proxy_series.front().size());
  std::vector<std::string> head{"window"};
  for (int o = 0; o < n_obs; ++o) head.push_back("proxy_" + std::to_string(o));
  head.push_back("total");
  w.row(head);
  for (size_t i = 0; i < res.proxy_series.size(); ++i) {
    std::vector<std::string> cells{std::to_string(i)};
    double total = 0.0;
    for (int o = 0; o < n_obs; ++o) {
      cells.push_back(fmt17(res.proxy_series[i][o]));
      total += res.proxy_series[i][o];
    }
    cells.push_back(fmt17(total));
    w.row(cells);
  }
}

void write_matrix_csv(const std::string& path, const Mat& m,
                      const std::string& header) {
  CsvWriter w(path);
  w.row({header});
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<std::string> cells;
    for (int j = 0; j < m.cols(); ++j) cells.push_back(fmt17(m(i, j)));
    w.row(cells);
  }
}

int run_optimize(const ExperimentConfig& cfg) {
  auto target = make_target(cfg);
  const ObservableSet fs = make_observables(cfg, *target);
  ExperimentConfig local = cfg;
  if (cfg.gamma != "identity") {
    local.opt.gamma0 = make_gamma(cfg, *target).mat();
  }

  const auto t0 = std::chrono::steady_clock::now();
  const int n_chains = std::max(1, cfg.chains);
  std::vector<ChainOutputs> outs(n_chains);
  const int workers = std::min(thread_cap(), n_chains);

  auto run_chain = [&](int c) {
    try {
      run_optimizer(*target, fs, local.opt, cfg.seed + static_cast<std::uint64_t>(c),
                    outs[c].opt);
    } catch (const DivergenceError& e) {
      outs[c].diverged = true;
      outs[c].diverged_epoch = e.epoch;
    }
  };
  if (workers <= 1) {
    for (int c = 0; c < n_chains; ++c) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < n_chains; ++c) pool.emplace_back(run_chain, c);
    for (auto& th : pool) th.join();
  }
  const auto t1 = std::chrono::steady_clock::now();

  write_gamma_trajectory(cfg, outs);
  // Variance proxy from the qualifying-window zeta records at the final Gamma.
  std::vector<Vec> proxies;
  bool any_diverged = false;
  long div_epoch = 0;
  long l_star = 0, qualifying = 0;
  for (const auto& c : outs) {
    any_diverged = any_diverged || c.diverged;
    if (c.diverged && div_epoch == 0) div_epoch = c.diverged_epoch;
    l_star += c.opt.l_star;
    qualifying += c.opt.qualifying;
    if (!c.opt.zeta_records.empty() && !c.opt.gamma_trajectory.empty()) {
      const Mat gfin = c.opt.gamma_trajectory.back().second;
      proxies.push_back(zeta_variance_proxy(
          c.opt.zeta_records, project_pd(symmetrize(gfin), cfg.opt.mu)));
    }
  }
  if (!proxies.empty()) {
    write_variance_table(cfg, proxies, "zeta_proxy");
  }
  write_proxy_series(cfg, outs.front().opt);

  json diag;
  diag["l_star"] = l_star;
  diag["qualifying_windows"] = qualifying;
  diag["diverged"] = any_diverged;
  if (any_diverged) diag["diverged_epoch"] = div_epoch;
  diag["wall_time_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  write_diagnostics(cfg, diag);
  write_manifest(cfg);
  return any_diverged ? 3 : 0;
}

int run_fixed_gamma(const ExperimentConfig& cfg) {
  auto target = make_target(cfg);
  const ObservableSet fs = make_observables(cfg, *target);
  const FrictionMatrix gamma = make_gamma(cfg, *target);
  Dynamics dyn = Dynamics::baoab;
  if (cfg.dynamics == "overdamped") dyn = Dynamics::overdamped;
  else if (cfg.dynamics == "irreversible") dyn = Dynamics::irreversible_overdamped;
  else if (cfg.dynamics != "baoab") throw ConfigError("unknown dynamics " + cfg.dynamics);

  const auto t0 = std::chrono::steady_clock::now();
  const int n_chains = std::max(1, cfg.chains);
  std::vector<Vec> sigma2(n_chains);
  std::vector<int> diverged(n_chains, 0);
  std::vector<long> div_epoch(n_chains, 0);
  const int workers = std::min(thread_cap(), n_chains);

  auto run_chain = [&](int c) {
    try {
      const SampleResult res =
          run_sampler(*target, fs, gamma, dyn, cfg.opt.dt, cfg.opt.epochs,
                      cfg.seed + static_cast<std::uint64_t>(c), cfg.opt.minibatch);
      const BlockEstimate est =
          block_variance(res.f_samples, cfg.opt.B, cfg.block_T, cfg.block_NB,
                         cfg.opt.dt);
      sigma2[c] = est.sigma2;
    } catch (const DivergenceError& e) {
      diverged[c] = 1;
      div_epoch[c] = e.epoch;
    }
  };
  if (workers <= 1) {
    for (int c = 0; c < n_chains; ++c) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    for (int c = 0; c < n_chains; ++c) pool.emplace_back(run_chain, c);
    for (auto& th : pool) th.join();
  }
  const auto t1 = std::chrono::steady_clock::now();

  write_fixed_gamma_row(cfg, gamma.mat());
  std::vector<Vec> ok;
  for (int c = 0; c < n_chains; ++c) {
    if (!diverged[c]) ok.push_back(sigma2[c]);
  }
  if (!ok.empty()) write_variance_table(cfg, ok, "block_average");

  bool any_diverged = false;
  long first_epoch = 0;
  for (int c = 0; c < n_chains; ++c) {
    if (diverged[c]) {
      any_diverged = true;
      if (first_epoch == 0) first_epoch = div_epoch[c];
    }
  }
  json diag;
  diag["diverged"] = any_diverged;
  if (any_diverged) diag["diverged_epoch"] = first_epoch;
  diag["wall_time_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  write_diagnostics(cfg, diag);
  write_manifest(cfg);
  return any_diverged ? 3 : 0;
}

int run_galerkin(const ExperimentConfig& cfg) {
  auto target = make_target(cfg);
  const ObservableSet fs = make_observables(cfg, *target);
  const FrictionMatrix gamma = make_gamma(cfg, *target);
  const int n = target->dim();
  if (n > 2) {
    throw ConfigError("galerkin mode: size guard requires n <= 2");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const HermiteBasis basis = build_basis(*target, cfg.galerkin_k, n);
  const GeneratorMatrix gen = assemble(basis, gamma);

  std::vector<Vec> sigma2(1);
  sigma2[0] = Vec::Zero(fs.count());
  Mat dg_total = Mat::Zero(n, n);
  Mat grad_total = Mat::Zero(n, n);
  for (int o = 0; o < fs.count(); ++o) {
    const GalerkinSolution sol = solve(gen, basis, fs.members[o]);
    sigma2[0][o] = variance(gen, sol);
    dg_total += fs.weights[o] * delta_gamma(basis, sol);
    grad_total += fs.weights[o] * variance_gradient(gen, basis, sol);
    if (cfg.dump_matrices && o == 0) {
      write_matrix_csv(cfg.out_dir + "/generator_matrix.csv", gen.full(),
                       "# negative generator, flattened (k,l) x (khat,lhat)");
      write_matrix_csv(cfg.out_dir + "/solution_coefficients.csv",
                       Mat(sol.phi.transpose()), "# phi coefficients");
    }
  }
  const auto t1 = std::chrono::steady_clock::now();

  write_fixed_gamma_row(cfg, gamma.mat());
  write_variance_table(cfg, sigma2, "galerkin");
  write_matrix_csv(cfg.out_dir + "/delta_gamma.csv", dg_total, "# delta gamma");
  write_matrix_csv(cfg.out_dir + "/variance_gradient.csv", grad_total,
                   "# d sigma^2 / d Gamma");

  json diag;
  diag["diverged"] = false;
  diag["galerkin_k"] = cfg.galerkin_k;
  diag["basis_size"] = gen.S;
  diag["wall_time_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  write_diagnostics(cfg, diag);
  write_manifest(cfg);
  return 0;
}

}  // namespace

void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      if (section != "run" && section != "target" && section != "opt" &&
          section != "blocks") {
        throw ConfigError("config: unknown section [" + section + "]");
      }
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const size_t bb = s.find_first_not_of(" \t");
      const size_t ee = s.find_last_not_of(" \t");
      s = bb == std::string::npos ? "" : s.substr(bb, ee - bb + 1);
    };
    trim(key);
    trim(val);
    const std::string full = section.empty() ? key : section + "." + key;
    try {
      if (full == "run.mode") cfg.mode = val;
      else if (full == "run.seed") cfg.seed = std::stoull(val);
      else if (full == "run.out") cfg.out_dir = val;
      else if (full == "run.chains") cfg.chains = std::stoi(val);
      else if (full == "run.gamma") cfg.gamma = val;
      else if (full == "run.dynamics") cfg.dynamics = val;
      else if (full == "run.galerkin_k") cfg.galerkin_k = std::stoi(val);
      else if (full == "target.kind") cfg.target = val;
      else if (full == "target.v0") cfg.v0 = std::stod(val);
      else if (full == "target.bridge_n") cfg.bridge_n = std::stoi(val);
      else if (full == "target.bridge_delta") cfg.bridge_delta = std::stod(val);
      else if (full == "target.synth_n") cfg.synth_n = std::stoi(val);
      else if (full == "target.synth_p") cfg.synth_p = std::stoi(val);
      else if (full == "target.csv_path") cfg.csv_path = val;
      else if (full == "target.csv_label") cfg.csv_label = val;
      else if (full == "target.observable") cfg.observable = val;
      else if (full == "opt.dt") cfg.opt.dt = std::stod(val);
      else if (full == "opt.T") cfg.opt.T = std::stol(val);
      else if (full == "opt.B") cfg.opt.B = std::stol(val);
      else if (full == "opt.L") cfg.opt.L = std::stoi(val);
      else if (full == "opt.G") cfg.opt.G = std::stoi(val);
      else if (full == "opt.K") cfg.opt.K = std::stoi(val);
      else if (full == "opt.D_conv") cfg.opt.D_conv = std::stod(val);
      else if (full == "opt.alpha") cfg.opt.alpha = std::stod(val);
      else if (full == "opt.r") cfg.opt.r = std::stod(val);
      else if (full == "opt.mu") cfg.opt.mu = std::stod(val);
      else if (full == "opt.epochs") cfg.opt.epochs = std::stol(val);
      else if (full == "opt.minibatch") cfg.opt.minibatch = std::stoi(val);
      else if (full == "opt.hessian_free") cfg.opt.hessian_free = val == "true" || val == "1";
      else if (full == "opt.alpha_decay") cfg.opt.alpha_decay = val == "true" || val == "1";
      else if (full == "opt.mode") {
        if (val == "full") cfg.opt.mode = OptConfig::Mode::full;
        else if (val == "diagonal") cfg.opt.mode = OptConfig::Mode::diagonal;
        else if (val == "scalar") cfg.opt.mode = OptConfig::Mode::scalar;
        else throw ConfigError("config: unknown opt.mode " + val);
      } else if (full == "opt.update") {
        if (val == "gd") cfg.opt.update = OptConfig::Update::gd;
        else if (val == "heavy_ball") cfg.opt.update = OptConfig::Update::heavy_ball;
        else throw ConfigError("config: unknown opt.update " + val);
      } else if (full == "blocks.T") cfg.block_T = std::stol(val);
      else if (full == "blocks.NB") cfg.block_NB = std::stoi(val);
      else throw ConfigError("config: unknown key '" + full + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(lineno) + ": bad value for " + full);
    }
  }
}

int run(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir);
  if (cfg.mode == "optimize") return run_optimize(cfg);
  if (cfg.mode == "sample" || cfg.mode == "benchmark") return run_fixed_gamma(cfg);
  if (cfg.mode == "galerkin") return run_galerkin(cfg);
  throw ConfigError("unknown mode '" + cfg.mode + "'");
}

}  // namespace frictuner
