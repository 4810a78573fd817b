#include "frictuner/observables.hpp"

namespace frictuner {

Observable linear_observable(const Vec& l) {
  Observable f;
  f.dim = static_cast<int>(l.size());
  f.name = "linear";
  f.eval = [l](const Vec& q) { return l.dot(q); };
  f.grad = [l](const Vec&) { return l; };
  return f;
}

Observable quadratic_observable(const SymMatrix& u0, const Vec& l) {
  if (u0.size() != l.size()) {
    throw DimensionError("quadratic_observable: U0/l size mismatch");
  }
  Observable f;
  f.dim = u0.size();
  f.name = "quadratic";
  Mat m = u0.mat();
  f.eval = [m, l](const Vec& q) { return 0.5 * q.dot(m * q) + l.dot(q); };
  f.grad = [m, l](const Vec& q) { return Vec(m * q + l); };
  return f;
}

Observable quartic_observable() {
  Observable f;
  f.dim = 1;
  f.name = "quartic";
  f.eval = [](const Vec& q) {
    const double x = q[0];
    return x * x * x * x;
  };
  f.grad = [](const Vec& q) {
    Vec g(1);
    g[0] = 4.0 * q[0] * q[0] * q[0];
    return g;
  };
  return f;
}

Observable odd_polynomial_observable(const std::vector<double>& coeffs) {
  if (coeffs.empty()) {
    throw ConfigError("odd_polynomial_observable: empty coefficient list");
  }
  Observable f;
  f.dim = 1;
  f.name = "odd_poly";
  f.eval = [coeffs](const Vec& q) {
    const double x = q[0];
    double acc = 0.0, xp = x;  // x^{2i+1}
    for (double a : coeffs) {
      acc += a * xp;
      xp *= x * x;
    }
    return acc;
  };
  f.grad = [coeffs](const Vec& q) {
    const double x = q[0];
    double acc = 0.0, xp = 1.0;  // x^{2i}
    for (size_t i = 0; i < coeffs.size(); ++i) {
      acc += coeffs[i] * static_cast<double>(2 * i + 1) * xp;
      xp *= x * x;
    }
    Vec g(1);
    g[0] = acc;
    return g;
  };
  return f;
}

Observable norm_squared_observable(int n) {
  Observable f;
  f.dim = n;
  f.name = "norm_squared";
  f.eval = [](const Vec& q) { return 0.5 * q.squaredNorm(); };
  f.grad = [](const Vec& q) { return q; };
  return f;
}

Observable coordinate_observable(int n, int index) {
  if (index < 0 || index >= n) {
    throw DimensionError("coordinate_observable: index out of range");
  }
  Observable f;
  f.dim = n;
  f.name = "coord_" + std::to_string(index);
  f.eval = [index](const Vec& q) { return q[index]; };
  f.grad = [n, index](const Vec&) {
    Vec g = Vec::Zero(n);
    g[index] = 1.0;
    return g;
  };
  return f;
}

ObservableSet ObservableSet::single(Observable f) {
  ObservableSet s;
  s.members.push_back(std::move(f));
  s.weights.push_back(1.0);
  return s;
}

ObservableSet ObservableSet::coordinates(int n) {
  ObservableSet s;
  for (int i = 0; i < n; ++i) {
    s.members.push_back(coordinate_observable(n, i));
    s.weights.push_back(1.0);
  }
  return s;
}

void ObservableSet::validate() const {
  if (members.empty()) {
    throw ConfigError("ObservableSet: empty");
  }
  if (weights.size() != members.size()) {
    throw ConfigError("ObservableSet: weight count mismatch");
  }
  for (double w : weights) {
    if (w < 0.0) throw ConfigError("ObservableSet: negative weight");
  }
  for (const auto& m : members) {
    if (m.dim != members.front().dim) {
      throw DimensionError("ObservableSet: mixed dimensions");
    }
  }
}

Vec grad_row(const Observable& f, const Vec& q, const Mat& Dq) {
  if (q.size() != Dq.rows() || f.dim != q.size()) {
    throw DimensionError("grad_row: dimension mismatch");
  }
  return Dq.transpose() * f.grad(q);
}

}  // namespace frictuner
