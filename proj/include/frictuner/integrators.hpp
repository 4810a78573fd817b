#pragma once

#include "frictuner/core.hpp"
#include "frictuner/targets.hpp"

namespace frictuner {

struct PhaseState {
  Vec q, p;
  static PhaseState zero(int n) { return {Vec::Zero(n), Vec::Zero(n)}; }
};

/// First-variation matrices, initialized Dq = 0, Dp = I.
struct TangentState {
  Mat Dq, Dp;
  static TangentState initial(int n) {
    return {Mat::Zero(n, n), Mat::Identity(n, n)};
  }
  void reset() {
    Dq.setZero();
    Dp.setIdentity();
  }
  double max_abs() const {
    return std::max(Dq.cwiseAbs().maxCoeff(), Dp.cwiseAbs().maxCoeff());
  }
};

/// Tangent along a fixed unit direction v.
struct DirTangentState {
  Vec Dqv, Dpv, v;
  static DirTangentState initial(const Vec& v);
};

/// Spectral factors of the OU momentum refresh, recomputed whenever Gamma or
/// dt changes: damp = exp(-dt Gamma), noise = sqrt(I - exp(-2 dt Gamma)).
struct OuCache {
  Mat damp;
  Mat noise;
  double dt = 0.0;
  static OuCache make(const FrictionMatrix& gamma, double dt);
};

/// One BAOAB step of underdamped Langevin (M = I). grad_cache, when non-null,
/// must hold grad U(q) on entry and holds grad U(q') on return.
void baoab_step(PhaseState& s, const TargetView& force, const OuCache& ou,
                double dt, RngStream& rng, Vec* grad_cache = nullptr);

/// Coupled tangent step bracketing a baoab_step from q_old to q_new. The final
/// substep uses the Hessian at q_new applied to the step-entry Dq. With
/// hessian_free, each Hessian product column is the displaced-gradient
/// difference -grad U(q + (dt/2) Dq_k) + grad U(q); exact for quadratic U.
void tangent_baoab_step(TangentState& t, const Vec& q_old, const Vec& q_new,
                        const TargetView& force, const OuCache& ou, double dt,
                        bool hessian_free);

/// Single-column variant of tangent_baoab_step.
void dir_tangent_step(DirTangentState& d, const Vec& q_old, const Vec& q_new,
                      const TargetView& force, const OuCache& ou, double dt,
                      bool hessian_free);

/// Euler-Maruyama overdamped step q <- q - grad U(q) dt + sqrt(2 dt) xi.
void overdamped_step(Vec& q, const TargetView& force, double dt, RngStream& rng);

/// q <- q - (I + J) grad U(q) dt + sqrt(2 dt) xi for antisymmetric J.
void irreversible_overdamped_step(Vec& q, const TargetView& force, const Mat& J,
                                  double dt, RngStream& rng);

/// The cyclic antisymmetric matrix with J_{ij} = 1 when j - i = 1 or 1 - n.
Mat cyclic_antisymmetric(int n);

inline constexpr double kDivergenceBound = 1e8;

/// Divergence guard: all entries finite and below kDivergenceBound.
bool state_admissible(const PhaseState& s);
bool tangent_admissible(const TangentState& t);

}  // namespace frictuner
