#include "frictuner/variance.hpp"

#include <cmath>

namespace frictuner {

BlockEstimate block_variance(const Mat& samples, long B, long T, int N_B, double dt) {
  if (B < 0 || T <= 0 || N_B <= 0 || dt <= 0.0) {
    throw ConfigError("block_variance: invalid parameters");
  }
  const long need = B + static_cast<long>(N_B) * T;
  if (samples.rows() < need) {
    throw DataError("block_variance: need " + std::to_string(need) + " samples, have " +
                    std::to_string(samples.rows()));
  }
  const int n_obs = static_cast<int>(samples.cols());
  const long N = static_cast<long>(N_B) * T;

  Vec mean = Vec::Zero(n_obs);
  for (long j = 0; j < N; ++j) {
    mean += samples.row(B + j).transpose();
  }
  mean /= static_cast<double>(N);

  BlockEstimate est;
  est.n_blocks = N_B;
  est.block_len = T;
  est.dt = dt;
  est.sigma2 = Vec::Zero(n_obs);
  const double scale = std::sqrt(dt / static_cast<double>(T));
  for (int l = 0; l < N_B; ++l) {
    Vec block_sum = Vec::Zero(n_obs);
    const long base = B + static_cast<long>(l) * T;
    for (long i = 0; i < T; ++i) {
      block_sum += samples.row(base + i).transpose() - mean;
    }
    est.sigma2 += (scale * block_sum).cwiseAbs2();
  }
  est.sigma2 /= static_cast<double>(N_B);
  est.mean_across = est.sigma2.mean();
  est.var_across = (est.sigma2.array() - est.mean_across).square().mean();
  return est;
}

Vec zeta_variance_proxy(const std::vector<Mat>& zeta_records,
                        const FrictionMatrix& gamma) {
  if (zeta_records.empty()) {
    throw DataError("zeta_variance_proxy: no qualifying blocks");
  }
  const int n_obs = static_cast<int>(zeta_records.front().rows());
  Vec acc = Vec::Zero(n_obs);
  for (const Mat& z : zeta_records) {
    for (int o = 0; o < n_obs; ++o) {
      acc[o] += z.row(o) * gamma.mat() * z.row(o).transpose();
    }
  }
  return 2.0 * acc / static_cast<double>(zeta_records.size());
}

}  // namespace frictuner
