#include "frictuner/analytic.hpp"

#include <cmath>

namespace frictuner {

bool commutes(const Mat& a, const Mat& b, double tol) {
  return (a * b - b * a).cwiseAbs().maxCoeff() <= tol;
}

namespace {

void require_commuting(const GaussianCase& c) {
  const Mat& s = c.sigma.mat();
  const Mat& u = c.u0.mat();
  const Mat& g = c.gamma.mat();
  if (!commutes(s, u) || !commutes(g, s) || !commutes(g, u)) {
    throw UnsupportedError("analytic: Sigma, U0, Gamma must commute pairwise");
  }
}

Mat inverse_spd(const SymMatrix& m) {
  auto [vals, vecs] = sym_eigs(m);
  if (vals.minCoeff() <= 0.0) {
    throw NumericError("inverse_spd: matrix not positive definite");
  }
  return vecs * vals.cwiseInverse().asDiagonal() * vecs.transpose();
}

}  // namespace

PoissonCoeffs poisson_coeffs(const GaussianCase& c) {
  require_commuting(c);
  const Mat& s = c.sigma.mat();
  const Mat& u = c.u0.mat();
  const Mat& g = c.gamma.mat();
  const Mat ginv = inverse_spd(c.gamma.sym());
  const Mat sinv = inverse_spd(c.sigma);
  PoissonCoeffs pc;
  pc.G = 0.5 * s * u * ginv * sinv + 0.5 * g * u * s;
  pc.E = 0.5 * u * s;
  pc.H = 0.5 * s * u * ginv;
  pc.g = g * s * c.l;
  pc.h = s * c.l;
  return pc;
}

double asymptotic_variance_quadratic(const GaussianCase& c) {
  require_commuting(c);
  const Mat& s = c.sigma.mat();
  const Mat& u = c.u0.mat();
  const Mat& g = c.gamma.mat();
  const Mat ginv = inverse_spd(c.gamma.sym());
  const double quad = 0.5 * (s * u * ginv * u * s + g * u * s * s * u * s).trace();
  const double lin = 2.0 * c.l.dot(s * g * s * c.l);
  return quad + lin;
}

double variance_directional_derivative(const GaussianCase& c, const SymMatrix& delta) {
  const PoissonCoeffs pc = poisson_coeffs(c);
  const Mat& d = delta.mat();
  const double qterm = 2.0 * (pc.E * d * pc.E.transpose() * c.sigma.mat()).trace();
  const double pterm = -2.0 * (pc.H * d * pc.H).trace();
  const double hterm = 2.0 * pc.h.dot(d * pc.h);
  return qterm + pterm + hterm;
}

Mat delta_gamma_quadratic(const GaussianCase& c) {
  const PoissonCoeffs pc = poisson_coeffs(c);
  return Mat(-pc.E.transpose() * c.sigma.mat() * pc.E + pc.H * pc.H -
             pc.h * pc.h.transpose());
}

FrictionMatrix optimal_gamma_commuting(const SymMatrix& sigma, const SymMatrix& u0,
                                       const Vec& l) {
  const int n = sigma.size();
  if (l.size() != n || u0.size() != n) {
    throw DimensionError("optimal_gamma_commuting: size mismatch");
  }
  if (n == 1) {
    const double s = sigma(0, 0);
    const double u = u0(0, 0);
    if (u == 0.0) {
      throw UnsupportedError("optimal_gamma_commuting: 1D needs U0 != 0");
    }
    const double g = 1.0 / std::sqrt(s + 4.0 * l[0] * l[0] / (u * u));
    return FrictionMatrix(SymMatrix(g * Mat::Identity(1, 1)), g);
  }
  if (l.cwiseAbs().maxCoeff() != 0.0) {
    throw UnsupportedError(
        "optimal_gamma_commuting: no closed form for the matrix case with l != 0");
  }
  if (!commutes(sigma.mat(), u0.mat())) {
    throw UnsupportedError("optimal_gamma_commuting: Sigma and U0 must commute");
  }
  auto [vals, vecs] = sym_eigs(sigma);
  if (vals.minCoeff() <= 0.0) {
    throw NumericError("optimal_gamma_commuting: Sigma not positive definite");
  }
  Vec inv_sqrt = vals.array().pow(-0.5).matrix();
  Mat g = vecs * inv_sqrt.asDiagonal() * vecs.transpose();
  return FrictionMatrix(symmetrize(g), inv_sqrt.minCoeff() - kEigTol / 2);
}

double linear_observable_variance(const Vec& alpha, double gamma) {
  return 2.0 * gamma * alpha.squaredNorm();
}

Mat mk_matrix(int k, double gamma) {
  if (k < 0) throw ConfigError("mk_matrix: k must be nonnegative");
  const int m = k + 1;
  Mat M = Mat::Zero(m, m);
  for (int i = 1; i <= m; ++i) {
    M(i - 1, i - 1) = (i - 1) * gamma;
    if (i + 1 <= m) M(i - 1, i) = i;
    if (i - 1 >= 1) M(i - 1, i - 2) = i - k - 2;
  }
  return M;
}

OddPolySolution solve_mk(int k, double gamma) {
  if (k < 1 || k % 2 == 0) {
    throw ConfigError("solve_mk: k must be a positive odd integer");
  }
  if (gamma <= 0.0) {
    throw ConfigError("solve_mk: gamma must be positive");
  }
  OddPolySolution sol;
  sol.k = k;
  sol.gamma = gamma;
  sol.a = Mat::Zero(k + 1, k + 1);

  // prev(j) = coefficient with p-power j on the previously solved diagonal.
  Vec prev;
  for (int d = k; d >= 1; d -= 2) {
    Vec rhs = Vec::Zero(d + 1);
    if (d == k) {
      rhs[0] = 1.0;
    } else {
      for (int i = 1; i <= d + 1; ++i) {
        rhs[i - 1] = gamma * i * (i + 1) * prev[i + 1];
      }
    }
    const Mat M = mk_matrix(d, gamma);
    Eigen::FullPivLU<Mat> lu(M);
    if (!lu.isInvertible()) {
      throw NumericError("solve_mk: singular M_" + std::to_string(d));
    }
    Vec x = lu.solve(rhs);  // (a_{d,0}, a_{d-1,1}, ..., a_{0,d})
    for (int j = 0; j <= d; ++j) {
      sol.a(d - j, j) = x[j];
    }
    prev = x;
  }
  return sol;
}

namespace {

// E[z^m] for z ~ N(0,1): (m-1)!! for even m, 0 otherwise.
double gaussian_moment(int m) {
  if (m % 2 == 1) return 0.0;
  double acc = 1.0;
  for (int j = m - 1; j >= 1; j -= 2) acc *= j;
  return acc;
}

}  // namespace

double odd_poly_variance(const OddPolySolution& s) {
  // sigma^2 = 2 sum a_{ij} E[q^{i+k}] E[p^j]; pi(q^k) = 0 for odd k.
  double acc = 0.0;
  for (int i = 0; i <= s.k; ++i) {
    for (int j = 0; j <= s.k; ++j) {
      if (s.a(i, j) == 0.0) continue;
      acc += s.a(i, j) * gaussian_moment(i + s.k) * gaussian_moment(j);
    }
  }
  return 2.0 * acc;
}

double quartic_variance(double gamma) {
  if (gamma <= 0.0) {
    throw std::domain_error("quartic_variance: gamma must be positive");
  }
  const double g2 = gamma * gamma;
  return 12.0 * (21.0 * g2 * g2 + 55.0 * g2 + 27.0) / (gamma * (3.0 * g2 + 4.0));
}

}  // namespace frictuner
