#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "frictuner/core.hpp"

namespace frictuner {

/// Potential U with gradient; Hessian-vector products and minibatch gradients
/// are optional capabilities. Instances are immutable and shareable.
class Target {
 public:
  virtual ~Target() = default;

  virtual int dim() const = 0;
  virtual Vec gradient(const Vec& q) const = 0;

  virtual bool has_hessian() const { return false; }
  virtual Vec hessian_vec(const Vec&, const Vec&) const {
    throw UnsupportedError("target: hessian_vec capability absent");
  }

  virtual bool has_potential() const { return false; }
  virtual double potential(const Vec&) const {
    throw UnsupportedError("target: potential capability absent");
  }

  virtual bool has_minibatch() const { return false; }
  virtual Vec minibatch_gradient(const Vec&, const std::vector<int>&) const {
    throw UnsupportedError("target: minibatch capability absent");
  }
  virtual std::vector<int> sample_batch(int, RngStream&) const {
    throw UnsupportedError("target: minibatch capability absent");
  }
};

using TargetPtr = std::shared_ptr<const Target>;

/// Binds a target to an optional minibatch index set; the integrators consume
/// forces through this view so a fresh batch can be installed per step.
struct TargetView {
  const Target* target = nullptr;
  const std::vector<int>* batch = nullptr;

  int dim() const { return target->dim(); }
  Vec grad(const Vec& q) const;
  bool has_hessian() const { return target->has_hessian(); }
  Vec hessian_vec(const Vec& q, const Vec& v) const {
    return target->hessian_vec(q, v);
  }
};

/// U(q) = q^T P q / 2 for SPD precision P.
class GaussianTarget : public Target {
 public:
  explicit GaussianTarget(SymMatrix precision);

  int dim() const override { return precision_.size(); }
  Vec gradient(const Vec& q) const override { return precision_.mat() * q; }
  bool has_hessian() const override { return true; }
  Vec hessian_vec(const Vec&, const Vec& v) const override {
    return precision_.mat() * v;
  }
  bool has_potential() const override { return true; }
  double potential(const Vec& q) const override {
    return 0.5 * q.dot(precision_.mat() * q);
  }

  const SymMatrix& precision() const { return precision_; }
  /// Covariance = precision^{-1}, from the cached eigendecomposition.
  Mat covariance() const;
  /// precision^{+1/2}; spectral power for benchmarks (e.g. Sigma^{-1/2}).
  Mat precision_power(double expo) const;

 private:
  SymMatrix precision_;
  Vec eva_;
  Mat evec_;
};

/// Discretized diffusion-bridge potential: tridiagonal precision with
/// diagonal 2/delta + delta/4 and off-diagonal -1/delta.
class BridgeTarget : public GaussianTarget {
 public:
  BridgeTarget(int n, double delta);
  double delta() const { return delta_; }

  static SymMatrix precision_matrix(int n, double delta);

 private:
  double delta_;
};

/// 1D U(q) = q^4/4 - q^2 + q/2; nonconvex stress target.
class DoubleWellTarget : public Target {
 public:
  int dim() const override { return 1; }
  Vec gradient(const Vec& q) const override;
  bool has_hessian() const override { return true; }
  Vec hessian_vec(const Vec& q, const Vec& v) const override;
  bool has_potential() const override { return true; }
  double potential(const Vec& q) const override;
};

/// Test scaffolding: potential assembled from callables.
class CustomTarget : public Target {
 public:
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Vec(const Vec&, const Vec&)>;
  using PotFn = std::function<double(const Vec&)>;

  CustomTarget(int n, GradFn grad, HessFn hess = nullptr, PotFn pot = nullptr)
      : n_(n), grad_(std::move(grad)), hess_(std::move(hess)), pot_(std::move(pot)) {}

  int dim() const override { return n_; }
  Vec gradient(const Vec& q) const override { return grad_(q); }
  bool has_hessian() const override { return hess_ != nullptr; }
  Vec hessian_vec(const Vec& q, const Vec& v) const override {
    if (!hess_) throw UnsupportedError("CustomTarget: no hessian");
    return hess_(q, v);
  }
  bool has_potential() const override { return pot_ != nullptr; }
  double potential(const Vec& q) const override {
    if (!pot_) throw UnsupportedError("CustomTarget: no potential");
    return pot_(q);
  }

 private:
  int n_;
  GradFn grad_;
  HessFn hess_;
  PotFn pot_;
};

/// Bayesian logistic regression posterior in preconditioned coordinates
/// beta_hat = Sigma^{-1/2} beta, prior precision Sigma^{-1} = (1/p) sum X_i X_i^T.
class LogisticTarget : public Target {
 public:
  /// X: p x n feature matrix (rows are datapoints), Y in {0,1}^p.
  /// Without an explicit c, the auto-scale c = 5 / max_i(Sigma^{1/2} sum_j X_j Y_j)_i
  /// is applied.
  LogisticTarget(Mat X, Vec Y, std::optional<double> c = std::nullopt);

  int dim() const override { return static_cast<int>(X_.cols()); }
  int data_count() const { return static_cast<int>(X_.rows()); }

  Vec gradient(const Vec& q) const override;
  bool has_hessian() const override { return true; }
  Vec hessian_vec(const Vec& q, const Vec& v) const override;
  bool has_potential() const override { return true; }
  double potential(const Vec& q) const override;

  bool has_minibatch() const override { return true; }
  /// Prior term exact; likelihood term scaled by p/|batch|.
  Vec minibatch_gradient(const Vec& q, const std::vector<int>& batch) const override;
  /// Draws m indices without replacement.
  std::vector<int> sample_batch(int m, RngStream& rng) const override;

  double scale_c() const { return c_; }
  const Mat& sigma_sqrt() const { return sigma_sqrt_; }
  const SymMatrix& prior_precision() const { return sigma_inv_; }
  /// Target with the same data and c rescaled by (p/m)^{-1} for minibatch runs.
  LogisticTarget with_minibatch_scale(int m) const;

 private:
  Mat X_;
  Vec Y_;
  double c_;
  SymMatrix sigma_inv_;
  Mat sigma_sqrt_;
};

/// CSV ingestion: header row, label column by name, empty cell = missing
/// (row dropped), duplicate feature columns dropped, then greedy filtering
/// until the feature matrix has full column rank (relative tolerance 1e-8).
struct CsvIngestReport {
  int rows_total = 0;
  int rows_used = 0;
  int cols_total = 0;
  int cols_dropped_duplicate = 0;
  int cols_dropped_dependent = 0;
  std::vector<std::string> kept_columns;
};

LogisticTarget ingest_csv(const std::string& path, const std::string& label_column,
                          CsvIngestReport* report = nullptr);

/// Deterministic synthetic logistic data for benchmarks.
LogisticTarget make_synthetic_logistic(int n, int p, RngStream& rng);

}  // namespace frictuner
