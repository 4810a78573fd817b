#include "frictuner/core.hpp"

#include <bit>
#include <cmath>

namespace frictuner {

SymMatrix::SymMatrix(const Mat& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("SymMatrix: input is not square");
  }
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix symmetrize(const Mat& a) { return SymMatrix(a); }

std::pair<Vec, Mat> sym_eigs(const SymMatrix& m) {
  if (!m.mat().allFinite()) {
    throw NumericError("sym_eigs: non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(m.mat());
  if (es.info() != Eigen::Success) {
    throw NumericError("sym_eigs: eigendecomposition failed");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

FrictionMatrix::FrictionMatrix(SymMatrix m, double mu) : m_(std::move(m)), mu_(mu) {
  if (mu_ <= 0.0) {
    throw ConfigError("FrictionMatrix: eigenvalue floor must be positive");
  }
  auto [vals, vecs] = sym_eigs(m_);
  if (vals.minCoeff() < mu_ - kEigTol) {
    throw NumericError("FrictionMatrix: smallest eigenvalue below floor");
  }
}

FrictionMatrix FrictionMatrix::scaled_identity(int n, double value, double mu) {
  return FrictionMatrix(SymMatrix(value * Mat::Identity(n, n)), mu);
}

FrictionMatrix project_pd(const SymMatrix& m, double mu) {
  if (mu <= 0.0) {
    throw ConfigError("project_pd: eigenvalue floor must be positive");
  }
  auto [vals, vecs] = sym_eigs(m);
  Vec clipped = vals.cwiseMax(mu);
  Mat out = vecs * clipped.asDiagonal() * vecs.transpose();
  return FrictionMatrix(symmetrize(out), mu);
}

SymMatrix spd_matrix_function(const FrictionMatrix& g,
                              const std::function<double(double)>& scalar_fn) {
  auto [vals, vecs] = sym_eigs(g.sym());
  Vec mapped(vals.size());
  for (int i = 0; i < vals.size(); ++i) {
    mapped[i] = scalar_fn(vals[i]);
    if (!std::isfinite(mapped[i])) {
      throw NumericError("spd_matrix_function: scalar_fn produced a non-finite value");
    }
  }
  Mat out = vecs * mapped.asDiagonal() * vecs.transpose();
  return symmetrize(out);
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t state = seed;
  std::uint64_t salt = splitmix64(state);
  state = seed ^ (salt + 0x9E3779B97F4A7C15ULL * (stream_id + 1));
  bool all_zero = true;
  for (auto& w : s_) {
    w = splitmix64(state);
    all_zero = all_zero && w == 0;
  }
  if (all_zero) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  // 53-bit mantissa, shifted into (0, 1] so log() below is safe.
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Vec RngStream::normal_vec(int n) {
  Vec out(n);
  for (int i = 0; i < n; ++i) out[i] = normal();
  return out;
}

std::uint64_t RngStream::uniform_below(std::uint64_t bound) {
  if (bound == 0) {
    throw ConfigError("uniform_below: bound must be positive");
  }
  // Rejection sampling on the top multiple of bound; unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

}  // namespace frictuner
