#include "frictuner/galerkin.hpp"

#include <cmath>

namespace frictuner {

namespace {

// Gauss-Hermite nodes/weights for the N(0,1) weight via Golub-Welsch on the
// probabilists' recurrence (off-diagonal sqrt(k)).
void gauss_hermite(int n_nodes, Vec& nodes, Vec& weights) {
  Mat J = Mat::Zero(n_nodes, n_nodes);
  for (int k = 1; k < n_nodes; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  if (es.info() != Eigen::Success) {
    throw NumericError("gauss_hermite: eigensolver failed");
  }
  nodes = es.eigenvalues();
  weights.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = v0 * v0;
  }
}

// Normalized Hermite values H_0..H_K at x: H_{k+1} = (x H_k - sqrt(k) H_{k-1})/sqrt(k+1).
void hermite_values(int K, double x, double* out) {
  out[0] = 1.0;
  if (K >= 1) out[1] = x;
  for (int k = 1; k < K; ++k) {
    out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                 std::sqrt(static_cast<double>(k + 1));
  }
}

struct QuadGrid {
  Mat nodes;  // n x N
  Vec rho;    // normalized
};

QuadGrid make_grid(const Target& t, int n, int per_axis, const Vec& scales) {
  Vec x1, w1;
  gauss_hermite(per_axis, x1, w1);
  const long total = n == 1 ? per_axis : static_cast<long>(per_axis) * per_axis;
  QuadGrid g;
  g.nodes.resize(n, total);
  Vec log_rho(total);
  Vec q(n);
  long idx = 0;
  if (n == 1) {
    for (int i = 0; i < per_axis; ++i) {
      q[0] = scales[0] * x1[i];
      g.nodes.col(idx) = q;
      log_rho[idx] = std::log(w1[i]) - t.potential(q) + 0.5 * x1[i] * x1[i];
      ++idx;
    }
  } else {
    for (int i = 0; i < per_axis; ++i) {
      for (int j = 0; j < per_axis; ++j) {
        q[0] = scales[0] * x1[i];
        q[1] = scales[1] * x1[j];
        g.nodes.col(idx) = q;
        log_rho[idx] = std::log(w1[i] * w1[j]) - t.potential(q) +
                       0.5 * (x1[i] * x1[i] + x1[j] * x1[j]);
        ++idx;
      }
    }
  }
  const double m = log_rho.maxCoeff();
  g.rho = (log_rho.array() - m).exp().matrix();
  const double z = g.rho.sum();
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw NumericError("make_grid: degenerate quadrature weights");
  }
  g.rho /= z;
  return g;
}

// <H_a, H_b>_pi over the grid, chunked GEMM over nodes.
Mat compute_m0(const QuadGrid& g, int n, int K, int P) {
  const long N = g.nodes.cols();
  Mat m0 = Mat::Zero(P, P);
  const long chunk = 4096;
  std::vector<double> h1(K + 1), h2(K + 1);
  Mat B(P, std::min(chunk, N));
  for (long start = 0; start < N; start += chunk) {
    const long c = std::min(chunk, N - start);
    for (long j = 0; j < c; ++j) {
      hermite_values(K, g.nodes(0, start + j), h1.data());
      if (n == 2) hermite_values(K, g.nodes(1, start + j), h2.data());
      for (int a = 0; a < P; ++a) {
        const int a1 = n == 1 ? a : a / (K + 1);
        const int a2 = n == 1 ? 0 : a % (K + 1);
        B(a, j) = n == 1 ? h1[a1] : h1[a1] * h2[a2];
      }
    }
    m0.noalias() +=
        B.leftCols(c) * g.rho.segment(start, c).asDiagonal() * B.leftCols(c).transpose();
  }
  return 0.5 * (m0 + m0.transpose());
}

}  // namespace

int HermiteBasis::lin(const int* idx) const {
  int flat = 0;
  for (int c = 0; c < n; ++c) flat = flat * (K + 1) + idx[c];
  return flat;
}

void HermiteBasis::delin(int flat, int* idx) const {
  for (int c = n - 1; c >= 0; --c) {
    idx[c] = flat % (K + 1);
    flat /= (K + 1);
  }
}

Vec HermiteBasis::project_f(const Observable& f) const {
  const long N = nodes.cols();
  Vec raw = Vec::Zero(P);  // int f H_a dpi
  std::vector<double> h1(K + 1), h2(K + 1);
  for (long j = 0; j < N; ++j) {
    const double fv = f.eval(nodes.col(j));
    hermite_values(K, nodes(0, j), h1.data());
    if (n == 2) hermite_values(K, nodes(1, j), h2.data());
    for (int a = 0; a < P; ++a) {
      const int a1 = n == 1 ? a : a / (K + 1);
      const int a2 = n == 1 ? 0 : a % (K + 1);
      raw[a] += rho[j] * fv * (n == 1 ? h1[a1] : h1[a1] * h2[a2]);
    }
  }
  return alpha * raw;
}

double HermiteBasis::mean_f(const Observable& f) const {
  double acc = 0.0;
  for (long j = 0; j < nodes.cols(); ++j) {
    acc += rho[j] * f.eval(nodes.col(j));
  }
  return acc;
}

HermiteBasis build_basis(const Target& t, int K, int n, const QuadratureSpec& quad) {
  if (n < 1 || n > 2 || K < 1 || K > 12) {
    throw ConfigError("build_basis: guard requires 1 <= n <= 2 and 1 <= K <= 12");
  }
  if (t.dim() != n) {
    throw DimensionError("build_basis: target dimension mismatch");
  }
  if (!t.has_potential()) {
    throw UnsupportedError("build_basis: target must expose the potential");
  }

  Vec scales = Vec::Constant(n, quad.envelope_scale);
  if (quad.envelope_scale <= 0.0) {
    if (const auto* g = dynamic_cast<const GaussianTarget*>(&t)) {
      const Mat cov = g->covariance();
      for (int c = 0; c < n; ++c) {
        scales[c] = 1.3 * std::sqrt(cov(c, c));
      }
    } else {
      scales.setConstant(1.6);
    }
  }

  const int P = static_cast<int>(std::pow(K + 1, n) + 0.5);
  HermiteBasis basis;
  basis.n = n;
  basis.K = K;
  basis.P = P;

  int per_axis = quad.initial_nodes;
  QuadGrid grid = make_grid(t, n, per_axis, scales);
  Mat m0 = compute_m0(grid, n, K, P);
  bool converged = false;
  while (per_axis * 2 <= quad.max_nodes) {
    per_axis *= 2;
    QuadGrid finer = make_grid(t, n, per_axis, scales);
    Mat m0f = compute_m0(finer, n, K, P);
    const double diff = (m0f - m0).cwiseAbs().maxCoeff();
    grid = std::move(finer);
    m0 = std::move(m0f);
    if (diff < quad.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw AccuracyError("build_basis: quadrature did not converge at " +
                        std::to_string(per_axis) + " nodes per axis");
  }

  Eigen::LLT<Mat> llt(m0);
  if (llt.info() != Eigen::Success) {
    throw NumericError("build_basis: moment matrix not positive definite");
  }
  // H_hat = L^{-1} H so that alpha m0 alpha^T = I.
  Mat L = llt.matrixL();
  basis.alpha = L.triangularView<Eigen::Lower>().solve(Mat::Identity(P, P));
  basis.m0 = m0;
  basis.nodes = grid.nodes;
  basis.rho = grid.rho;

  // cmat[i] = alpha S_i alpha^T with S_i(u, v) = sqrt(u_i) m0(u - e_i, v).
  basis.cmat.resize(n);
  int uidx[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    Mat S = Mat::Zero(P, P);
    for (int u = 0; u < P; ++u) {
      basis.delin(u, uidx);
      if (uidx[i] == 0) continue;
      const double c = std::sqrt(static_cast<double>(uidx[i]));
      uidx[i] -= 1;
      const int shifted = basis.lin(uidx);
      uidx[i] += 1;
      S.row(u) = c * m0.row(shifted);
    }
    basis.cmat[i] = basis.alpha * S * basis.alpha.transpose();
  }
  return basis;
}

GeneratorMatrix assemble(const HermiteBasis& basis, const FrictionMatrix& gamma) {
  const int n = basis.n;
  const int K = basis.K;
  const int P = basis.P;
  const int S = P * P;
  if (gamma.size() != n) {
    throw DimensionError("assemble: gamma dimension mismatch");
  }
  GeneratorMatrix gen;
  gen.n = n;
  gen.K = K;
  gen.P = P;
  gen.S = S;
  gen.transport = Mat::Zero(S, S);
  gen.diss = Mat::Zero(S, S);

  int l[2] = {0, 0}, lh[2] = {0, 0};
  for (int lf = 0; lf < P; ++lf) {
    basis.delin(lf, l);
    // Transport: for fixed p-indices, dense blocks over the q-indices.
    for (int i = 0; i < n; ++i) {
      if (l[i] >= 1) {
        // term1: lhat = l - e_i, entry -C^i(khat, k) sqrt(l_i)
        const double c = std::sqrt(static_cast<double>(l[i]));
        l[i] -= 1;
        const int lhf = basis.lin(l);
        l[i] += 1;
        for (int k = 0; k < P; ++k) {
          for (int kh = 0; kh < P; ++kh) {
            gen.transport(k * P + lf, kh * P + lhf) -= c * basis.cmat[i](kh, k);
          }
        }
      }
      if (l[i] + 1 <= K) {
        // term2: lhat = l + e_i, entry +C^i(k, khat) sqrt(lhat_i)
        const double c = std::sqrt(static_cast<double>(l[i] + 1));
        l[i] += 1;
        const int lhf = basis.lin(l);
        l[i] -= 1;
        for (int k = 0; k < P; ++k) {
          for (int kh = 0; kh < P; ++kh) {
            gen.transport(k * P + lf, kh * P + lhf) += c * basis.cmat[i](k, kh);
          }
        }
      }
    }
    // Dissipative: khat = k, lhat = l - e_j + e_i.
    for (int j = 0; j < n; ++j) {
      if (l[j] < 1) continue;
      for (int i = 0; i < n; ++i) {
        lh[0] = l[0];
        lh[1] = l[1];
        lh[j] -= 1;
        lh[i] += 1;
        if (lh[i] > K) continue;
        const double c =
            std::sqrt(static_cast<double>(l[j]) * static_cast<double>(lh[i])) *
            gamma.mat()(i, j);
        const int lhf = basis.lin(lh);
        for (int k = 0; k < P; ++k) {
          gen.diss(k * P + lf, k * P + lhf) += c;
        }
      }
    }
  }
  return gen;
}

GalerkinSolution solve(const GeneratorMatrix& gen, const HermiteBasis& basis,
                       const Observable& f) {
  const int S = gen.S;
  const int P = gen.P;
  Vec rhs = Vec::Zero(S);
  const Vec proj = basis.project_f(f);  // <f, H_hat_k>_pi
  for (int k = 0; k < P; ++k) {
    rhs[k * P + 0] = proj[k];  // l = 0 rows only
  }
  rhs[0] = 0.0;  // (0,0) removed; phi_{0,0} = 0 enforced independently

  const Mat full = gen.full();
  Mat reduced = full.bottomRightCorner(S - 1, S - 1);
  Vec rhs_red = rhs.tail(S - 1);
  Eigen::PartialPivLU<Mat> lu(reduced);
  Vec phi_red = lu.solve(rhs_red);
  const double resid = (reduced * phi_red - rhs_red).norm();
  if (!phi_red.allFinite() || resid > 1e-8 * std::max(1.0, rhs_red.norm())) {
    throw NumericError("galerkin solve: singular or ill-conditioned system");
  }
  GalerkinSolution sol;
  sol.phi = Vec::Zero(S);
  sol.phi.tail(S - 1) = phi_red;
  sol.rhs = rhs;
  return sol;
}

double variance(const GeneratorMatrix& gen, const GalerkinSolution& sol) {
  return 2.0 * sol.phi.dot(gen.diss * sol.phi);
}

Mat delta_gamma(const HermiteBasis& basis, const GalerkinSolution& sol) {
  const int n = basis.n;
  const int K = basis.K;
  const int P = basis.P;
  Mat dg = Mat::Zero(n, n);
  int l[2] = {0, 0}, ls[2] = {0, 0};
  for (int lf = 0; lf < P; ++lf) {
    basis.delin(lf, l);
    const int labs = l[0] + l[1];
    const double sign = labs % 2 == 0 ? 1.0 : -1.0;
    for (int i = 0; i < n; ++i) {
      if (l[i] < 1) continue;
      for (int j = 0; j < n; ++j) {
        ls[0] = l[0];
        ls[1] = l[1];
        ls[i] -= 1;
        ls[j] += 1;
        if (ls[j] > K) continue;
        const double c = std::sqrt(static_cast<double>(l[i]) *
                                   static_cast<double>(ls[j]));
        const int lsf = basis.lin(ls);
        double acc = 0.0;
        for (int k = 0; k < P; ++k) {
          acc += sol.phi[k * P + lf] * sol.phi[k * P + lsf];
        }
        dg(i, j) += sign * c * acc;
      }
    }
  }
  return dg;
}

Mat variance_gradient(const GeneratorMatrix& gen, const HermiteBasis& basis,
                      const GalerkinSolution& sol) {
  const int n = basis.n;
  const int K = basis.K;
  const int P = basis.P;
  const int S = gen.S;
  const Mat full = gen.full();
  const Mat reduced = full.bottomRightCorner(S - 1, S - 1);
  Eigen::PartialPivLU<Mat> lu(reduced);
  const Vec w_red = lu.transpose().solve(Vec(sol.rhs.tail(S - 1)));

  Mat grad = Mat::Zero(n, n);
  int l[2] = {0, 0}, ls[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // u = dL^{ij} phi, u_{(k,l)} = sqrt(l_j lhat_i) phi_{k, l-e_j+e_i}
      Vec u = Vec::Zero(S);
      for (int lf = 0; lf < P; ++lf) {
        basis.delin(lf, l);
        if (l[j] < 1) continue;
        ls[0] = l[0];
        ls[1] = l[1];
        ls[j] -= 1;
        ls[i] += 1;
        if (ls[i] > K) continue;
        const double c = std::sqrt(static_cast<double>(l[j]) *
                                   static_cast<double>(ls[i]));
        const int lsf = basis.lin(ls);
        for (int k = 0; k < P; ++k) {
          u[k * P + lf] = c * sol.phi[k * P + lsf];
        }
      }
      grad(i, j) = -2.0 * w_red.dot(u.tail(S - 1));
    }
  }
  return grad;
}

}  // namespace frictuner
