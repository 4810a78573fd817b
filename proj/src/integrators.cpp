#include "frictuner/integrators.hpp"

#include <cmath>

namespace frictuner {

DirTangentState DirTangentState::initial(const Vec& v) {
  const double nv = v.norm();
  if (std::abs(nv - 1.0) > 1e-12) {
    throw ConfigError("DirTangentState: direction must be a unit vector");
  }
  DirTangentState d;
  d.Dqv = Vec::Zero(v.size());
  d.Dpv = v;  // Dp = I at block start, so Dp v = v
  d.v = v;
  return d;
}

OuCache OuCache::make(const FrictionMatrix& gamma, double dt) {
  if (dt <= 0.0) {
    throw ConfigError("OuCache: dt must be positive");
  }
  OuCache c;
  c.dt = dt;
  c.damp = spd_matrix_function(gamma, [dt](double lam) { return std::exp(-dt * lam); }).mat();
  c.noise = spd_matrix_function(gamma, [dt](double lam) {
              return std::sqrt(1.0 - std::exp(-2.0 * dt * lam));
            }).mat();
  return c;
}

void baoab_step(PhaseState& s, const TargetView& force, const OuCache& ou,
                double dt, RngStream& rng, Vec* grad_cache) {
  const double half = 0.5 * dt;
  Vec g = (grad_cache && grad_cache->size() == s.q.size()) ? *grad_cache
                                                           : force.grad(s.q);
  s.p -= half * g;                                   // B
  s.q += half * s.p;                                 // A
  s.p = ou.damp * s.p + ou.noise * rng.normal_vec(static_cast<int>(s.p.size()));  // O
  s.q += half * s.p;                                 // A
  g = force.grad(s.q);
  s.p -= half * g;                                   // B
  if (grad_cache) *grad_cache = g;
}

namespace {

// Hessian(q) * M columnwise; hessian-free uses the displaced-gradient
// difference with displacement (dt/2) per column, which stands in for the
// half-step product D2U(q) M * dt/2 directly.
Mat hess_times(const Vec& q, const Mat& m, const TargetView& force, double dt,
               bool hessian_free) {
  const int n = static_cast<int>(q.size());
  Mat out(n, m.cols());
  if (!hessian_free) {
    if (!force.has_hessian()) {
      throw UnsupportedError(
          "tangent step: Hessian capability missing and hessian-free disabled");
    }
    for (int k = 0; k < m.cols(); ++k) {
      out.col(k) = force.hessian_vec(q, m.col(k));
    }
    return out;
  }
  const Vec g0 = force.grad(q);
  const double h = 0.5 * dt;
  for (int k = 0; k < m.cols(); ++k) {
    out.col(k) = (force.grad(q + h * m.col(k)) - g0) / h;
  }
  return out;
}

}  // namespace

void tangent_baoab_step(TangentState& t, const Vec& q_old, const Vec& q_new,
                        const TargetView& force, const OuCache& ou, double dt,
                        bool hessian_free) {
  const double half = 0.5 * dt;
  const Mat Dq_entry = t.Dq;
  t.Dp -= half * hess_times(q_old, Dq_entry, force, dt, hessian_free);
  t.Dq += half * t.Dp;
  t.Dp = ou.damp * t.Dp;
  t.Dq += half * t.Dp;
  t.Dp -= half * hess_times(q_new, Dq_entry, force, dt, hessian_free);
}

void dir_tangent_step(DirTangentState& d, const Vec& q_old, const Vec& q_new,
                      const TargetView& force, const OuCache& ou, double dt,
                      bool hessian_free) {
  const double half = 0.5 * dt;
  const Vec Dqv_entry = d.Dqv;
  d.Dpv -= half * hess_times(q_old, Dqv_entry, force, dt, hessian_free).col(0);
  d.Dqv += half * d.Dpv;
  d.Dpv = ou.damp * d.Dpv;
  d.Dqv += half * d.Dpv;
  d.Dpv -= half * hess_times(q_new, Dqv_entry, force, dt, hessian_free).col(0);
}

void overdamped_step(Vec& q, const TargetView& force, double dt, RngStream& rng) {
  q += -force.grad(q) * dt +
       std::sqrt(2.0 * dt) * rng.normal_vec(static_cast<int>(q.size()));
}

void irreversible_overdamped_step(Vec& q, const TargetView& force, const Mat& J,
                                  double dt, RngStream& rng) {
  if (J.rows() != q.size() || J.cols() != q.size()) {
    throw DimensionError("irreversible_overdamped_step: J size mismatch");
  }
  if ((J + J.transpose()).cwiseAbs().maxCoeff() != 0.0) {
    throw ConfigError("irreversible_overdamped_step: J must be antisymmetric");
  }
  const Vec g = force.grad(q);
  q += -(g + J * g) * dt +
       std::sqrt(2.0 * dt) * rng.normal_vec(static_cast<int>(q.size()));
}

Mat cyclic_antisymmetric(int n) {
  if (n < 3) {
    throw ConfigError("cyclic_antisymmetric: needs n >= 3");
  }
  Mat J = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int d = j - i;
      if (d == 1 || d == 1 - n) J(i, j) = 1.0;
      else if (-d == 1 || -d == 1 - n) J(i, j) = -1.0;
    }
  }
  return J;
}

bool state_admissible(const PhaseState& s) {
  return s.q.allFinite() && s.p.allFinite() &&
         s.q.cwiseAbs().maxCoeff() <= kDivergenceBound &&
         s.p.cwiseAbs().maxCoeff() <= kDivergenceBound;
}

bool tangent_admissible(const TangentState& t) {
  return t.Dq.allFinite() && t.Dp.allFinite() &&
         t.max_abs() <= kDivergenceBound;
}

}  // namespace frictuner
