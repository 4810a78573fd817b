#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "frictuner/core.hpp"
#include "frictuner/integrators.hpp"
#include "frictuner/observables.hpp"
#include "frictuner/targets.hpp"

namespace frictuner {

/// Running block integrals zeta = sum grad f(q)^T Dq dt (one row per
/// observable) for the primary chain and the momentum-flipped replica.
struct ZetaAccumulator {
  Mat zeta;        // n_obs x n
  Mat zeta_tilde;  // n_obs x n
  long t0 = 0;

  static ZetaAccumulator zero(int n_obs, int n) {
    return {Mat::Zero(n_obs, n), Mat::Zero(n_obs, n), 0};
  }
  void reset(long t) {
    zeta.setZero();
    zeta_tilde.setZero();
    t0 = t;
  }
};

void accumulate(ZetaAccumulator& acc, const ObservableSet& fs, const Vec& q,
                const Mat& Dq, const Vec& q_tilde, const Mat& Dq_tilde, double dt);

struct OptConfig {
  double dt = 0.08;
  long T = 125;   // block length in steps
  long B = 100;   // burn-in steps
  int L = 1;      // proposals averaged per update (denominator in the step)
  int G = 1;      // proposals per Gamma update
  int K = 1;      // replicas per expectation
  double D_conv = 2e-4;
  double alpha = 1.0;
  double r = 0.5;       // heavy-ball annealing factor
  double mu = 0.2;      // eigenvalue floor
  enum class Mode { full, diagonal, scalar };
  enum class Update { gd, heavy_ball };
  Mode mode = Mode::full;
  Update update = Update::heavy_ball;
  long epochs = 50000;
  bool hessian_free = false;
  bool alpha_decay = false;  // alpha^i = alpha / sqrt(i)
  int minibatch = 0;         // 0 = full gradient
  Mat gamma0;                // empty = identity

  void validate(int n) const;
};

struct OptimizerState {
  FrictionMatrix gamma;
  SymMatrix theta;           // heavy-ball momentum, zero at start
  std::vector<Mat> pending;  // at most G proposals between updates
  long k = 0;                // proposals emitted
  long l_star = 0;           // failed convergence checks
  long epoch = 0;
  long updates = 0;
};

/// Applies the configured update rule to the pending proposals:
/// gd:         Gamma <- Pi_pd^mu(Gamma + (alpha/2L) sum (b_j + b_j^T))
/// heavy_ball: Theta <- (1 - alpha r) Theta + (alpha/2L) sum (b_j + b_j^T),
///             Gamma <- Pi_pd^mu(Gamma + alpha Theta)
/// diagonal mode zeroes off-diagonal entries of each proposal first; scalar
/// mode replaces each proposal by (trace/n) I. Empty pending is a logic error.
void update_gamma(OptimizerState& st, const OptConfig& cfg);

/// Block-boundary decision. When every entry of all four tangent matrices is
/// below d_conv, emits b = -sum_o w_o zeta_o (x) zeta_tilde_o and resets the
/// accumulator, replicas and tangents; otherwise increments l_star and leaves
/// the window running into the next block (reset happens only on success, so
/// slow tangent decay extends the integration window instead of stalling).
std::optional<Mat> try_reset_and_propose(
    ZetaAccumulator& acc, const ObservableSet& fs, const PhaseState& driver,
    std::vector<PhaseState>& primaries, std::vector<PhaseState>& replicas,
    std::vector<TangentState>& tangents, std::vector<TangentState>& tangents_tilde,
    double d_conv, long epoch, long& l_star);

struct OptimizerResult {
  std::vector<std::pair<long, Mat>> gamma_trajectory;  // (epoch, Gamma) per block
  std::vector<Mat> proposals;                          // per qualifying window
  std::vector<Mat> zeta_records;                       // n_obs x n per window
  std::vector<Vec> proxy_series;  // per window, per-observable 2 zeta G zeta^T
  long l_star = 0;
  long qualifying = 0;
  Vec observable_means;
  PhaseState final_state;
  long epochs_run = 0;
};

/// Algorithm 2: thinned single-trajectory Gamma optimization. Fills `out`
/// progressively; divergence is propagated with the epoch index after the
/// partial results are finalized.
void run_optimizer(const Target& t, const ObservableSet& fs, const OptConfig& cfg,
                   std::uint64_t seed, OptimizerResult& out);

enum class Dynamics { baoab, overdamped, irreversible_overdamped };

struct SampleResult {
  Mat f_samples;  // row e = observable values after step e+1
  PhaseState final_state;
};

/// Fixed-Gamma sampling run recording per-epoch observable values.
SampleResult run_sampler(const Target& t, const ObservableSet& fs,
                         const FrictionMatrix& gamma, Dynamics dynamics, double dt,
                         long epochs, std::uint64_t seed, int minibatch = 0);

struct IndepConfig {
  double dt = 0.01;
  long B = 200;
  long T = 1000;
  int L = 100;  // outer samples
  int K = 1;    // inner replicas
  bool hessian_free = false;
  int threads = 1;
};

struct IndepEstimate {
  Mat mean;              // raw estimator average
  SymMatrix symmetrized;
  Mat stderr_entries;
  long samples = 0;
};

/// Independent-realisations DeltaGamma estimator: L outer draws from the
/// invariant law via burn-in, K coupled-noise replicas sharing noise during
/// burn-in and independent afterwards for the (q,p) and (q,-p) branches.
IndepEstimate estimate_delta_gamma_independent(const Target& t,
                                               const ObservableSet& fs,
                                               const FrictionMatrix& gamma,
                                               const IndepConfig& cfg,
                                               std::uint64_t seed);

}  // namespace frictuner
