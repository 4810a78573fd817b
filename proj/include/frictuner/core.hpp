#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

#include "frictuner/errors.hpp"

namespace frictuner {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kEigTol = 1e-10;

/// Dense real symmetric matrix. Entries are averaged with the transpose on
/// construction so that entries(i,j) == entries(j,i) holds exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Mat& a);

  static SymMatrix identity(int n) { return SymMatrix(Mat::Identity(n, n)); }

  int size() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Mat m_;
};

/// (a + a^T)/2. Non-square input is a dimension error.
SymMatrix symmetrize(const Mat& a);

/// Eigendecomposition of a symmetric matrix, ascending eigenvalues.
/// Non-finite input or solver failure is a numeric error.
std::pair<Vec, Mat> sym_eigs(const SymMatrix& m);

/// SPD matrix with an eigenvalue floor mu; the object the optimizer moves.
class FrictionMatrix {
 public:
  FrictionMatrix() = default;
  /// Validates min eigenvalue >= mu - kEigTol.
  FrictionMatrix(SymMatrix m, double mu);

  static FrictionMatrix scaled_identity(int n, double value, double mu);

  const SymMatrix& sym() const { return m_; }
  const Mat& mat() const { return m_.mat(); }
  double floor() const { return mu_; }
  int size() const { return m_.size(); }

 private:
  SymMatrix m_;
  double mu_ = 0.0;
};

/// Eigenvalue clipping to the floor mu, keeping eigenvectors.
FrictionMatrix project_pd(const SymMatrix& m, double mu);

/// Applies scalar_fn on the spectrum of g and reassembles in the same
/// eigenbasis. scalar_fn producing a non-finite value is a numeric error.
SymMatrix spd_matrix_function(const FrictionMatrix& g,
                              const std::function<double(double)>& scalar_fn);

/// Deterministic splittable random stream: per-(seed, stream_id) state derived
/// through SplitMix64, xoshiro256++ core, Box-Muller normals. Identical
/// (seed, stream_id) reproduces identical draw sequences bitwise. Single-owner.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  /// Uniform on (0, 1].
  double uniform();
  double normal();
  Vec normal_vec(int n);
  /// Uniform integer in [0, bound), bound >= 1.
  std::uint64_t uniform_below(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_, stream_id_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace frictuner
