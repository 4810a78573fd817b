#pragma once

#include <functional>
#include <string>
#include <vector>

#include "frictuner/core.hpp"

namespace frictuner {

/// Position-only observable f(q) with gradient. Momentum dependence is ruled
/// out by construction: both callables receive q alone.
struct Observable {
  int dim = 0;
  std::string name;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;
};

Observable linear_observable(const Vec& l);
Observable quadratic_observable(const SymMatrix& u0, const Vec& l);
/// 1D f(q) = q^4.
Observable quartic_observable();
/// 1D f(q) = sum_i a_i q^{2i+1}.
Observable odd_polynomial_observable(const std::vector<double>& coeffs);
Observable norm_squared_observable(int n);
Observable coordinate_observable(int n, int index);

/// Weighted family defining the objective sum_i w_i sigma_i^2.
struct ObservableSet {
  std::vector<Observable> members;
  std::vector<double> weights;

  static ObservableSet single(Observable f);
  /// All coordinates f_i(q) = q_i with unit weights.
  static ObservableSet coordinates(int n);

  int count() const { return static_cast<int>(members.size()); }
  int dim() const { return members.empty() ? 0 : members.front().dim; }
  void validate() const;
};

/// Row vector grad f(q)^T Dq.
Vec grad_row(const Observable& f, const Vec& q, const Mat& Dq);

}  // namespace frictuner
