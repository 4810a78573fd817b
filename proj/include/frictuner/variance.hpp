#pragma once

#include <vector>

#include "frictuner/core.hpp"

namespace frictuner {

/// Block-averaging estimate of the asymptotic variance per observable.
struct BlockEstimate {
  int n_blocks = 0;
  long block_len = 0;
  double dt = 0.0;
  Vec sigma2;          // per observable
  double mean_across = 0.0;
  double var_across = 0.0;
};

/// samples: epochs x observables matrix of f values (epoch 0 first).
/// sigma2_k = (1/N_B) sum_l [ sqrt(dt/T) sum_{i=1..T} (f_k(q^{i+Tl+B}) - mean_k) ]^2
/// with mean_k the plain average over the N_B*T post-burn-in samples.
BlockEstimate block_variance(const Mat& samples, long B, long T, int N_B, double dt);

/// 2 * mean_l (zeta_l Gamma zeta_l^T) per observable; zeta_records holds one
/// (observables x n) matrix per qualifying block. Empty input is a data error.
Vec zeta_variance_proxy(const std::vector<Mat>& zeta_records,
                        const FrictionMatrix& gamma);

}  // namespace frictuner
