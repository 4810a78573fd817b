#pragma once

#include "frictuner/core.hpp"

namespace frictuner {

/// Gaussian benchmark case: pi ~ N(0, Sigma), f(q) = q.U0 q/2 + l.q, M = I.
struct GaussianCase {
  SymMatrix sigma;
  SymMatrix u0;
  Vec l;
  FrictionMatrix gamma;

  int dim() const { return sigma.size(); }
};

/// Coefficients of the quadratic Poisson-solution ansatz
/// phi = q.Gq/2 + q.Ep + p.Hp/2 + g.q + h.p + const.
struct PoissonCoeffs {
  Mat G, E, H;
  Vec g, h;
};

/// Commutation test used by the commuting-case operations.
bool commutes(const Mat& a, const Mat& b, double tol = kEigTol);

/// Closed-form ansatz coefficients in the commuting case (A1 = A2 = 0):
/// G = Sigma U0 Gamma^{-1} Sigma^{-1}/2 + Gamma U0 Sigma/2, E = U0 Sigma/2,
/// H = Sigma U0 Gamma^{-1}/2, g = Gamma Sigma l, h = Sigma l.
/// Non-commuting input raises an unsupported-case error.
PoissonCoeffs poisson_coeffs(const GaussianCase& c);

/// Asymptotic variance for the quadratic observable, commuting case:
/// Tr(Sigma U0 Gamma^{-1} U0 Sigma + Gamma U0 Sigma^2 U0 Sigma)/2
///   + 2 l^T Sigma Gamma Sigma l.
double asymptotic_variance_quadratic(const GaussianCase& c);

/// Directional derivative of the variance in the direction delta (quadratic
/// Gaussian case, from the ansatz coefficients and Gaussian moments):
/// 2 Tr(E delta E^T Sigma) - 2 Tr(H delta H) + 2 h^T delta h.
double variance_directional_derivative(const GaussianCase& c, const SymMatrix& delta);

/// DeltaGamma = int grad_p phi (x) grad_p phi~ dpi~ = -E^T Sigma E + H^2 - h h^T.
Mat delta_gamma_quadratic(const GaussianCase& c);

/// Argmin of the variance over commuting Gamma: Sigma^{-1/2} for l = 0;
/// in 1D with l != 0, (Sigma + 4 l^2 / U0^2)^{-1/2}. The matrix case with
/// l != 0 has no closed form and raises an unsupported-case error.
FrictionMatrix optimal_gamma_commuting(const SymMatrix& sigma, const SymMatrix& u0,
                                       const Vec& l);

/// Asymptotic variance 2 gamma |alpha|^2 for f = alpha . grad U.
double linear_observable_variance(const Vec& alpha, double gamma);

/// Tridiagonal system for the top-degree Poisson coefficients of f = q^k
/// (k odd, standard Gaussian, scalar friction): rows 1..k+1 with
/// (M_k)_{i,i+1} = i, (M_k)_{i,i} = (i-1) gamma, (M_k)_{i,i-1} = i - k - 2.
Mat mk_matrix(int k, double gamma);

/// Full polynomial Poisson solution for f = q^k, k odd: solves
/// M_k a^{(k)} = e_1 and the degree-descending cascades
/// M_d a^{(d)} = v with v_i = gamma i (i+1) a^{(d+2)}_{p-power i+1}.
/// a(i, j) is the coefficient of q^i p^j.
struct OddPolySolution {
  int k = 0;
  double gamma = 0.0;
  Mat a;
};

OddPolySolution solve_mk(int k, double gamma);

/// Asymptotic variance of f = q^k from an odd-polynomial solution
/// (standard Gaussian moments).
double odd_poly_variance(const OddPolySolution& s);

/// Closed form 12(21 g^4 + 55 g^2 + 27) / (g (3 g^2 + 4)) for f = q^4 on the
/// standard Gaussian. gamma <= 0 is a domain error.
double quartic_variance(double gamma);

}  // namespace frictuner
