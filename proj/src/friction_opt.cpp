#include "frictuner/friction_opt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace frictuner {

void accumulate(ZetaAccumulator& acc, const ObservableSet& fs, const Vec& q,
                const Mat& Dq, const Vec& q_tilde, const Mat& Dq_tilde, double dt) {
  for (int o = 0; o < fs.count(); ++o) {
    acc.zeta.row(o) += dt * grad_row(fs.members[o], q, Dq).transpose();
    acc.zeta_tilde.row(o) += dt * grad_row(fs.members[o], q_tilde, Dq_tilde).transpose();
  }
}

void OptConfig::validate(int n) const {
  if (dt <= 0.0) throw ConfigError("OptConfig: dt must be positive");
  if (T <= 0) throw ConfigError("OptConfig: T must be positive");
  if (B < 0) throw ConfigError("OptConfig: B must be nonnegative");
  if (L <= 0 || G <= 0 || K <= 0) throw ConfigError("OptConfig: L, G, K must be positive");
  if (D_conv <= 0.0) throw ConfigError("OptConfig: D_conv must be positive");
  if (alpha < 0.0) throw ConfigError("OptConfig: alpha must be nonnegative");
  if (mu <= 0.0) throw ConfigError("OptConfig: mu must be positive");
  if (epochs <= B) throw ConfigError("OptConfig: epochs must exceed burn-in");
  if (minibatch < 0) throw ConfigError("OptConfig: minibatch must be nonnegative");
  if (gamma0.size() != 0 && (gamma0.rows() != n || gamma0.cols() != n)) {
    throw ConfigError("OptConfig: gamma0 dimension mismatch");
  }
}

namespace {

Mat apply_mode(const Mat& b, OptConfig::Mode mode) {
  switch (mode) {
    case OptConfig::Mode::full:
      return b;
    case OptConfig::Mode::diagonal:
      return b.diagonal().asDiagonal();
    case OptConfig::Mode::scalar: {
      const double s = b.trace() / static_cast<double>(b.rows());
      return s * Mat::Identity(b.rows(), b.cols());
    }
  }
  throw ConfigError("apply_mode: unknown mode");
}

double effective_alpha(const OptConfig& cfg, long updates) {
  if (!cfg.alpha_decay) return cfg.alpha;
  return cfg.alpha / std::sqrt(static_cast<double>(updates + 1));
}

}  // namespace

void update_gamma(OptimizerState& st, const OptConfig& cfg) {
  if (st.pending.empty()) {
    throw std::logic_error("update_gamma: no pending proposals");
  }
  const int n = st.gamma.size();
  Mat sum = Mat::Zero(n, n);
  for (const Mat& b : st.pending) {
    const Mat bb = apply_mode(b, cfg.mode);
    sum += bb + bb.transpose();
  }
  const double alpha = effective_alpha(cfg, st.updates);
  const Mat step = (alpha / (2.0 * cfg.L)) * sum;
  if (cfg.update == OptConfig::Update::gd) {
    st.gamma = project_pd(symmetrize(st.gamma.mat() + step), cfg.mu);
  } else {
    st.theta = symmetrize((1.0 - alpha * cfg.r) * st.theta.mat() + step);
    st.gamma = project_pd(symmetrize(st.gamma.mat() + alpha * st.theta.mat()), cfg.mu);
  }
  st.pending.clear();
  ++st.updates;
}

std::optional<Mat> try_reset_and_propose(
    ZetaAccumulator& acc, const ObservableSet& fs, const PhaseState& driver,
    std::vector<PhaseState>& primaries, std::vector<PhaseState>& replicas,
    std::vector<TangentState>& tangents, std::vector<TangentState>& tangents_tilde,
    double d_conv, long epoch, long& l_star) {
  double worst = 0.0;
  for (const auto& tg : tangents) worst = std::max(worst, tg.max_abs());
  for (const auto& tg : tangents_tilde) worst = std::max(worst, tg.max_abs());
  if (worst >= d_conv) {
    ++l_star;
    return std::nullopt;
  }
  const int n = static_cast<int>(driver.q.size());
  Mat proposal = Mat::Zero(n, n);
  for (int o = 0; o < fs.count(); ++o) {
    proposal -= fs.weights[o] *
                (acc.zeta.row(o).transpose() * acc.zeta_tilde.row(o));
  }
  for (size_t k = 1; k < primaries.size(); ++k) {
    primaries[k] = driver;
  }
  for (auto& rep : replicas) {
    rep.q = driver.q;
    rep.p = -driver.p;
  }
  for (auto& tg : tangents) tg.reset();
  for (auto& tg : tangents_tilde) tg.reset();
  acc.reset(epoch);
  return proposal;
}

namespace {

struct ChainCtx {
  PhaseState state;
  RngStream rng;
  RngStream batch_rng;
  Vec grad_cache;  // empty = invalid
  std::vector<int> batch;
};

}  // namespace

void run_optimizer(const Target& t, const ObservableSet& fs, const OptConfig& cfg,
                   std::uint64_t seed, OptimizerResult& out) {
  fs.validate();
  const int n = t.dim();
  if (fs.dim() != n) {
    throw DimensionError("run_optimizer: observable/target dimension mismatch");
  }
  cfg.validate(n);
  if (cfg.minibatch > 0 && !t.has_minibatch()) {
    throw UnsupportedError("run_optimizer: minibatch requested but unsupported");
  }
  const int n_obs = fs.count();
  const int K = cfg.K;

  OptimizerState st;
  {
    Mat g0 = cfg.gamma0.size() == 0 ? Mat(Mat::Identity(n, n)) : cfg.gamma0;
    st.gamma = project_pd(symmetrize(g0), cfg.mu);
    st.theta = SymMatrix(Mat::Zero(n, n));
  }
  OuCache ou = OuCache::make(st.gamma, cfg.dt);

  // Stream layout: driver = 0, first replica = 1, extra replicas pair off
  // above; batch streams live at 1000 + the same offsets.
  std::vector<ChainCtx> primaries, replicas;
  primaries.reserve(K);
  replicas.reserve(K);
  for (int k = 0; k < K; ++k) {
    const std::uint64_t sp = k == 0 ? 0 : 2 * k;
    const std::uint64_t sr = k == 0 ? 1 : 2 * k + 1;
    primaries.push_back({PhaseState::zero(n), RngStream(seed, sp),
                         RngStream(seed, 1000 + sp), Vec(), {}});
    replicas.push_back({PhaseState::zero(n), RngStream(seed, sr),
                        RngStream(seed, 1000 + sr), Vec(), {}});
  }
  ChainCtx& driver = primaries[0];

  out = OptimizerResult{};
  out.observable_means = Vec::Zero(n_obs);
  Vec obs_sum = Vec::Zero(n_obs);
  long obs_count = 0;

  auto advance = [&](ChainCtx& c, TangentState* tangent) {
    TargetView view{&t, nullptr};
    if (cfg.minibatch > 0) {
      c.batch = t.sample_batch(cfg.minibatch, c.batch_rng);
      view.batch = &c.batch;
    }
    const Vec q_old = c.state.q;
    Vec* cache = cfg.minibatch > 0 ? nullptr : &c.grad_cache;
    if (cache && cache->size() != n) {
      c.grad_cache = view.grad(c.state.q);
    }
    baoab_step(c.state, view, ou, cfg.dt, c.rng, cache);
    if (tangent) {
      tangent_baoab_step(*tangent, q_old, c.state.q, view, ou, cfg.dt,
                         cfg.hessian_free);
    }
  };

  try {
    // Burn-in: driver only.
    for (long i = 0; i < cfg.B; ++i) {
      advance(driver, nullptr);
      if (!state_admissible(driver.state)) {
        throw DivergenceError("run_optimizer: chain diverged during burn-in", i + 1);
      }
    }
    // Fork replicas and tangents.
    for (int k = 1; k < K; ++k) {
      primaries[k].state = driver.state;
      primaries[k].grad_cache = Vec();
    }
    for (int k = 0; k < K; ++k) {
      replicas[k].state.q = driver.state.q;
      replicas[k].state.p = -driver.state.p;
      replicas[k].grad_cache = Vec();
    }
    std::vector<TangentState> tangents(K, TangentState::initial(n));
    std::vector<TangentState> tangents_tilde(K, TangentState::initial(n));
    ZetaAccumulator acc = ZetaAccumulator::zero(n_obs, n);
    acc.t0 = cfg.B;
    out.gamma_trajectory.emplace_back(cfg.B, st.gamma.mat());

    std::vector<PhaseState> primary_states(K), replica_states(K);

    for (long i = cfg.B; i < cfg.epochs; ++i) {
      for (int k = 0; k < K; ++k) {
        advance(primaries[k], &tangents[k]);
        advance(replicas[k], &tangents_tilde[k]);
      }
      const long epoch = i + 1;
      for (int k = 0; k < K; ++k) {
        if (!state_admissible(primaries[k].state) ||
            !state_admissible(replicas[k].state) ||
            !tangent_admissible(tangents[k]) ||
            !tangent_admissible(tangents_tilde[k])) {
          throw DivergenceError("run_optimizer: divergence", epoch);
        }
      }
      // zeta += (dt/K) sum_k grad f^T Dq at the new states.
      for (int o = 0; o < n_obs; ++o) {
        Vec row = Vec::Zero(n);
        Vec row_t = Vec::Zero(n);
        for (int k = 0; k < K; ++k) {
          row += grad_row(fs.members[o], primaries[k].state.q, tangents[k].Dq);
          row_t += grad_row(fs.members[o], replicas[k].state.q, tangents_tilde[k].Dq);
        }
        acc.zeta.row(o) += (cfg.dt / K) * row.transpose();
        acc.zeta_tilde.row(o) += (cfg.dt / K) * row_t.transpose();
      }
      for (int o = 0; o < n_obs; ++o) {
        obs_sum[o] += fs.members[o].eval(driver.state.q);
      }
      ++obs_count;

      if ((epoch - cfg.B) % cfg.T == 0) {
        for (int k = 0; k < K; ++k) {
          primary_states[k] = primaries[k].state;
          replica_states[k] = replicas[k].state;
        }
        const Mat zeta_copy = acc.zeta;
        auto proposal =
            try_reset_and_propose(acc, fs, driver.state, primary_states,
                                  replica_states, tangents, tangents_tilde,
                                  cfg.D_conv, epoch, st.l_star);
        if (proposal.has_value()) {
          for (int k = 0; k < K; ++k) {
            if (k > 0) {
              primaries[k].state = primary_states[k];
              primaries[k].grad_cache = Vec();
            }
            replicas[k].state = replica_states[k];
            replicas[k].grad_cache = Vec();
          }
          out.zeta_records.push_back(zeta_copy);
          Vec proxy(n_obs);
          for (int o = 0; o < n_obs; ++o) {
            proxy[o] = 2.0 * zeta_copy.row(o) * st.gamma.mat() *
                       zeta_copy.row(o).transpose();
          }
          out.proxy_series.push_back(proxy);
          out.proposals.push_back(*proposal);
          const int slot = static_cast<int>(st.k % cfg.G);
          if (static_cast<int>(st.pending.size()) <= slot) {
            st.pending.resize(slot + 1);
          }
          st.pending[slot] = *proposal;
          ++st.k;
          ++out.qualifying;
          if (st.k % cfg.G == 0) {
            update_gamma(st, cfg);
            ou = OuCache::make(st.gamma, cfg.dt);
          }
        }
        out.gamma_trajectory.emplace_back(epoch, st.gamma.mat());
      }
      st.epoch = epoch;
    }
  } catch (const DivergenceError&) {
    out.l_star = st.l_star;
    out.observable_means = obs_count > 0 ? Vec(obs_sum / obs_count) : obs_sum;
    out.final_state = driver.state;
    out.epochs_run = st.epoch;
    throw;
  }
  out.l_star = st.l_star;
  out.observable_means = obs_count > 0 ? Vec(obs_sum / obs_count) : obs_sum;
  out.final_state = driver.state;
  out.epochs_run = cfg.epochs;
}

SampleResult run_sampler(const Target& t, const ObservableSet& fs,
                         const FrictionMatrix& gamma, Dynamics dynamics, double dt,
                         long epochs, std::uint64_t seed, int minibatch) {
  fs.validate();
  const int n = t.dim();
  if (fs.dim() != n) {
    throw DimensionError("run_sampler: observable/target dimension mismatch");
  }
  if (minibatch > 0 && !t.has_minibatch()) {
    throw UnsupportedError("run_sampler: minibatch requested but unsupported");
  }
  SampleResult res;
  res.f_samples.resize(epochs, fs.count());
  PhaseState s = PhaseState::zero(n);
  RngStream rng(seed, 0);
  RngStream batch_rng(seed, 1000);
  std::vector<int> batch;
  Vec grad_cache;
  OuCache ou;
  Mat J;
  if (dynamics == Dynamics::baoab) {
    ou = OuCache::make(gamma, dt);
  } else if (dynamics == Dynamics::irreversible_overdamped) {
    J = cyclic_antisymmetric(n);
  }
  for (long e = 0; e < epochs; ++e) {
    TargetView view{&t, nullptr};
    if (minibatch > 0) {
      batch = t.sample_batch(minibatch, batch_rng);
      view.batch = &batch;
    }
    switch (dynamics) {
      case Dynamics::baoab: {
        Vec* cache = minibatch > 0 ? nullptr : &grad_cache;
        if (cache && cache->size() != n) grad_cache = view.grad(s.q);
        baoab_step(s, view, ou, dt, rng, cache);
        break;
      }
      case Dynamics::overdamped:
        overdamped_step(s.q, view, dt, rng);
        break;
      case Dynamics::irreversible_overdamped:
        irreversible_overdamped_step(s.q, view, J, dt, rng);
        break;
    }
    if (!state_admissible(s)) {
      throw DivergenceError("run_sampler: divergence", e + 1);
    }
    for (int o = 0; o < fs.count(); ++o) {
      res.f_samples(e, o) = fs.members[o].eval(s.q);
    }
  }
  res.final_state = s;
  return res;
}

IndepEstimate estimate_delta_gamma_independent(const Target& t,
                                               const ObservableSet& fs,
                                               const FrictionMatrix& gamma,
                                               const IndepConfig& cfg,
                                               std::uint64_t seed) {
  fs.validate();
  const int n = t.dim();
  if (cfg.L <= 0 || cfg.K <= 0 || cfg.T <= 0 || cfg.B < 0 || cfg.dt <= 0.0) {
    throw ConfigError("estimate_delta_gamma_independent: invalid config");
  }
  const OuCache ou = OuCache::make(gamma, cfg.dt);
  std::vector<Mat> samples(cfg.L);

  auto run_sample = [&](int l) {
    const std::uint64_t base = 100 + static_cast<std::uint64_t>(l) * (2 * cfg.K + 1);
    RngStream burn_rng(seed, base);
    PhaseState start = PhaseState::zero(n);
    Vec cache;
    TargetView view{&t, nullptr};
    for (long i = 0; i < cfg.B; ++i) {
      if (cache.size() != n) cache = view.grad(start.q);
      baoab_step(start, view, ou, cfg.dt, burn_rng, &cache);
      if (!state_admissible(start)) {
        throw DivergenceError("indep estimator: burn-in divergence", i + 1);
      }
    }
    Mat zeta = Mat::Zero(fs.count(), n);
    Mat zeta_tilde = Mat::Zero(fs.count(), n);
    std::vector<PhaseState> prim(cfg.K, start);
    std::vector<PhaseState> til(cfg.K, PhaseState{start.q, -start.p});
    std::vector<TangentState> tan(cfg.K, TangentState::initial(n));
    std::vector<TangentState> tant(cfg.K, TangentState::initial(n));
    std::vector<RngStream> prng, trng;
    for (int k = 0; k < cfg.K; ++k) {
      prng.emplace_back(seed, base + 1 + k);
      trng.emplace_back(seed, base + 1 + cfg.K + k);
    }
    for (long i = 0; i < cfg.T; ++i) {
      for (int k = 0; k < cfg.K; ++k) {
        Vec q_old = prim[k].q;
        baoab_step(prim[k], view, ou, cfg.dt, prng[k]);
        tangent_baoab_step(tan[k], q_old, prim[k].q, view, ou, cfg.dt,
                           cfg.hessian_free);
        q_old = til[k].q;
        baoab_step(til[k], view, ou, cfg.dt, trng[k]);
        tangent_baoab_step(tant[k], q_old, til[k].q, view, ou, cfg.dt,
                           cfg.hessian_free);
        if (!state_admissible(prim[k]) || !state_admissible(til[k]) ||
            !tangent_admissible(tan[k]) || !tangent_admissible(tant[k])) {
          throw DivergenceError("indep estimator: divergence", cfg.B + i + 1);
        }
      }
      for (int o = 0; o < fs.count(); ++o) {
        Vec row = Vec::Zero(n), row_t = Vec::Zero(n);
        for (int k = 0; k < cfg.K; ++k) {
          row += grad_row(fs.members[o], prim[k].q, tan[k].Dq);
          row_t += grad_row(fs.members[o], til[k].q, tant[k].Dq);
        }
        zeta.row(o) += (cfg.dt / cfg.K) * row.transpose();
        zeta_tilde.row(o) += (cfg.dt / cfg.K) * row_t.transpose();
      }
    }
    Mat contribution = Mat::Zero(n, n);
    for (int o = 0; o < fs.count(); ++o) {
      contribution -= fs.weights[o] * (zeta.row(o).transpose() * zeta_tilde.row(o));
    }
    samples[l] = contribution;
  };

  const int workers = std::max(1, std::min(cfg.threads, cfg.L));
  if (workers == 1) {
    for (int l = 0; l < cfg.L; ++l) run_sample(l);
  } else {
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::mutex err_mutex;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          const int l = next.fetch_add(1);
          if (l >= cfg.L) break;
          try {
            run_sample(l);
          } catch (...) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!first_error) first_error = std::current_exception();
            break;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  IndepEstimate est;
  est.samples = cfg.L;
  est.mean = Mat::Zero(n, n);
  for (const Mat& m : samples) est.mean += m;
  est.mean /= static_cast<double>(cfg.L);
  Mat var = Mat::Zero(n, n);
  for (const Mat& m : samples) var += (m - est.mean).cwiseAbs2();
  var /= static_cast<double>(std::max(1, cfg.L - 1));
  est.stderr_entries = (var / static_cast<double>(cfg.L)).cwiseSqrt();
  est.symmetrized = symmetrize(est.mean);
  return est;
}

}  // namespace frictuner
