#pragma once

#include <vector>

#include "frictuner/core.hpp"
#include "frictuner/observables.hpp"
#include "frictuner/targets.hpp"

namespace frictuner {

struct QuadratureSpec {
  int initial_nodes = 64;   // per axis
  int max_nodes = 1024;     // per axis
  double tol = 1e-11;       // refinement stop on the moment matrix
  double envelope_scale = 0.0;  // 0 = auto from the target
};

/// Tensor Hermite basis in p and Gram-Schmidt-orthogonalized basis in q,
/// with the pi-moment tables the generator assembly needs.
struct HermiteBasis {
  int n = 0;
  int K = 0;
  int P = 0;              // (K+1)^n
  Mat alpha;              // lower-triangular, H_hat = alpha * H
  Mat m0;                 // <H_a, H_b>_pi
  std::vector<Mat> cmat;  // cmat[i](a,b) = <d_i H_hat_a, H_hat_b>_pi
  Mat nodes;              // n x N quadrature nodes (final refinement)
  Vec rho;                // normalized quadrature weights

  int lin(const int* idx) const;
  void delin(int flat, int* idx) const;

  /// <f, H_hat_k>_pi for all k.
  Vec project_f(const Observable& f) const;
  /// pi(f).
  double mean_f(const Observable& f) const;
};

/// Size guard n <= 2, K <= 12. Quadrature refinement failure is an accuracy
/// error.
HermiteBasis build_basis(const Target& t, int K, int n,
                         const QuadratureSpec& quad = {});

/// Negative generator on the (K+1)^{2n} tensor basis, Gamma dependence
/// isolated in the dissipative part. Index (k, l) flattens row-major with l
/// fastest.
struct GeneratorMatrix {
  int n = 0, K = 0, P = 0, S = 0;
  Mat transport;
  Mat diss;
  Mat full() const { return transport + diss; }
};

GeneratorMatrix assemble(const HermiteBasis& basis, const FrictionMatrix& gamma);

struct GalerkinSolution {
  Vec phi;  // size S, phi[0] = 0 enforced
  Vec rhs;  // size S, entry 0 zeroed (reduced right-hand side)
};

GalerkinSolution solve(const GeneratorMatrix& gen, const HermiteBasis& basis,
                       const Observable& f);

/// Full asymptotic variance 2 phi^T L_diss phi.
double variance(const GeneratorMatrix& gen, const GalerkinSolution& sol);

/// (DeltaGamma)_{ij} = sum phi_{k,l} phi_{k,l-e_i+e_j}
///                     sqrt(l_i (l-e_i+e_j)_j) (-1)^{|l|}.
Mat delta_gamma(const HermiteBasis& basis, const GalerkinSolution& sol);

/// Exact gradient of the discretized variance: entry (i,j) =
/// -2 (dL^{ij} phi)^T w with L_red^T w = rhs_red (adjoint solve).
Mat variance_gradient(const GeneratorMatrix& gen, const HermiteBasis& basis,
                      const GalerkinSolution& sol);

}  // namespace frictuner
