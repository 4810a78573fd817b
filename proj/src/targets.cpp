#include "frictuner/targets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace frictuner {

namespace {

// sigmoid(z) = 1/(1+e^{-z}), overflow-safe on both tails.
inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
inline double log1pexp(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

}  // namespace

Vec TargetView::grad(const Vec& q) const {
  Vec g = batch ? target->minibatch_gradient(q, *batch) : target->gradient(q);
  if (!g.allFinite()) {
    for (int i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("gradient: non-finite output at index " + std::to_string(i));
      }
    }
  }
  return g;
}

GaussianTarget::GaussianTarget(SymMatrix precision) : precision_(std::move(precision)) {
  auto [vals, vecs] = sym_eigs(precision_);
  if (vals.minCoeff() <= 0.0) {
    throw ConfigError("GaussianTarget: precision must be positive definite");
  }
  eva_ = vals;
  evec_ = vecs;
}

Mat GaussianTarget::covariance() const {
  return evec_ * eva_.cwiseInverse().asDiagonal() * evec_.transpose();
}

Mat GaussianTarget::precision_power(double expo) const {
  Vec powered = eva_.array().pow(expo).matrix();
  return evec_ * powered.asDiagonal() * evec_.transpose();
}

SymMatrix BridgeTarget::precision_matrix(int n, double delta) {
  if (n < 1 || delta <= 0.0) {
    throw ConfigError("BridgeTarget: need n >= 1 and delta > 0");
  }
  Mat p = Mat::Zero(n, n);
  const double diag = 2.0 / delta + delta / 4.0;
  const double off = -1.0 / delta;
  for (int i = 0; i < n; ++i) {
    p(i, i) = diag;
    if (i + 1 < n) {
      p(i, i + 1) = off;
      p(i + 1, i) = off;
    }
  }
  return SymMatrix(p);
}

BridgeTarget::BridgeTarget(int n, double delta)
    : GaussianTarget(precision_matrix(n, delta)), delta_(delta) {}

Vec DoubleWellTarget::gradient(const Vec& q) const {
  Vec g(1);
  g[0] = q[0] * q[0] * q[0] - 2.0 * q[0] + 0.5;
  return g;
}

Vec DoubleWellTarget::hessian_vec(const Vec& q, const Vec& v) const {
  Vec h(1);
  h[0] = (3.0 * q[0] * q[0] - 2.0) * v[0];
  return h;
}

double DoubleWellTarget::potential(const Vec& q) const {
  const double x = q[0];
  return 0.25 * x * x * x * x - x * x + 0.5 * x;
}

LogisticTarget::LogisticTarget(Mat X, Vec Y, std::optional<double> c)
    : X_(std::move(X)), Y_(std::move(Y)) {
  const int p = static_cast<int>(X_.rows());
  const int n = static_cast<int>(X_.cols());
  if (p == 0 || n == 0) {
    throw DataError("LogisticTarget: empty data");
  }
  if (Y_.size() != p) {
    throw DimensionError("LogisticTarget: label/feature row mismatch");
  }
  for (int i = 0; i < p; ++i) {
    if (Y_[i] != 0.0 && Y_[i] != 1.0) {
      throw FormatError("LogisticTarget: labels must be 0/1");
    }
  }
  sigma_inv_ = SymMatrix(Mat(X_.transpose() * X_ / static_cast<double>(p)));
  auto [vals, vecs] = sym_eigs(sigma_inv_);
  if (vals.minCoeff() <= 0.0) {
    throw DataError("LogisticTarget: prior precision singular; filter features first");
  }
  sigma_sqrt_ = vecs * vals.cwiseSqrt().cwiseInverse().asDiagonal() * vecs.transpose();
  if (c.has_value()) {
    if (*c < 0.0) throw ConfigError("LogisticTarget: c must be nonnegative");
    c_ = *c;
  } else {
    const Vec xy = sigma_sqrt_ * (X_.transpose() * Y_);
    const double m = xy.maxCoeff();
    if (m <= 0.0) {
      throw DataError("LogisticTarget: auto-scale denominator not positive");
    }
    c_ = 5.0 / m;
  }
}

Vec LogisticTarget::gradient(const Vec& q) const {
  const Vec z = X_ * (sigma_sqrt_ * q);
  Vec r(z.size());
  for (int i = 0; i < z.size(); ++i) {
    r[i] = Y_[i] - sigmoid(c_ * z[i]);
  }
  return q - c_ * (sigma_sqrt_ * (X_.transpose() * r));
}

Vec LogisticTarget::hessian_vec(const Vec& q, const Vec& v) const {
  const Vec z = X_ * (sigma_sqrt_ * q);
  const Vec s = X_ * (sigma_sqrt_ * v);
  Vec w(z.size());
  for (int i = 0; i < z.size(); ++i) {
    const double sig = sigmoid(c_ * z[i]);
    w[i] = c_ * c_ * sig * (1.0 - sig) * s[i];
  }
  return v + sigma_sqrt_ * (X_.transpose() * w);
}

double LogisticTarget::potential(const Vec& q) const {
  const Vec z = X_ * (sigma_sqrt_ * q);
  double lik = 0.0;
  for (int i = 0; i < z.size(); ++i) {
    lik += c_ * Y_[i] * z[i] - log1pexp(c_ * z[i]);
  }
  return 0.5 * q.squaredNorm() - lik;
}

Vec LogisticTarget::minibatch_gradient(const Vec& q, const std::vector<int>& batch) const {
  if (batch.empty()) {
    throw ConfigError("minibatch_gradient: empty batch");
  }
  const Vec hatq = sigma_sqrt_ * q;
  const double mult = static_cast<double>(X_.rows()) / static_cast<double>(batch.size());
  Vec acc = Vec::Zero(dim());
  for (int idx : batch) {
    const double z = X_.row(idx).dot(hatq);
    const double r = Y_[idx] - sigmoid(c_ * z);
    acc += X_.row(idx).transpose() * r;
  }
  return q - c_ * mult * (sigma_sqrt_ * acc);
}

std::vector<int> LogisticTarget::sample_batch(int m, RngStream& rng) const {
  const int p = data_count();
  if (m <= 0 || m > p) {
    throw ConfigError("sample_batch: need 0 < m <= p");
  }
  // Partial Fisher-Yates over a scratch index array.
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;
  std::vector<int> out(m);
  for (int i = 0; i < m; ++i) {
    const int j = i + static_cast<int>(rng.uniform_below(p - i));
    std::swap(idx[i], idx[j]);
    out[i] = idx[i];
  }
  return out;
}

LogisticTarget LogisticTarget::with_minibatch_scale(int m) const {
  const double frac = static_cast<double>(data_count()) / static_cast<double>(m);
  return LogisticTarget(X_, Y_, c_ / frac);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim spaces and CR
    size_t b = cell.find_first_not_of(" \t\r");
    size_t e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

LogisticTarget ingest_csv(const std::string& path, const std::string& label_column,
                          CsvIngestReport* report) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("ingest_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("ingest_csv: missing header row");
  }
  const std::vector<std::string> header = split_csv_line(line);
  int label_idx = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) label_idx = static_cast<int>(i);
  }
  if (label_idx < 0) {
    throw FormatError("ingest_csv: label column '" + label_column + "' not found");
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  int total_rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++total_rows;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw FormatError("ingest_csv: row with " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));
    }
    bool missing = false;
    for (const auto& c : cells) {
      if (c.empty()) {
        missing = true;
        break;
      }
    }
    if (missing) continue;
    std::vector<double> feat;
    feat.reserve(cells.size() - 1);
    double label = 0.0;
    for (size_t i = 0; i < cells.size(); ++i) {
      double v;
      try {
        size_t pos = 0;
        v = std::stod(cells[i], &pos);
        if (pos != cells[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError("ingest_csv: non-numeric cell '" + cells[i] + "'");
      }
      if (static_cast<int>(i) == label_idx) {
        label = v;
      } else {
        feat.push_back(v);
      }
    }
    if (label != 0.0 && label != 1.0) {
      throw FormatError("ingest_csv: non-binary label " + std::to_string(label));
    }
    rows.push_back(std::move(feat));
    labels.push_back(label);
  }
  if (rows.empty()) {
    throw DataError("ingest_csv: zero usable rows");
  }

  const int p = static_cast<int>(rows.size());
  const int n_raw = static_cast<int>(rows[0].size());
  Mat X(p, n_raw);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < n_raw; ++j) X(i, j) = rows[i][j];
  }
  std::vector<std::string> names;
  for (size_t i = 0; i < header.size(); ++i) {
    if (static_cast<int>(i) != label_idx) names.push_back(header[i]);
  }

  // Exact duplicate columns: keep the first occurrence.
  std::vector<int> keep;
  int dup_dropped = 0;
  for (int j = 0; j < n_raw; ++j) {
    bool dup = false;
    for (int k : keep) {
      if (X.col(j) == X.col(k)) {
        dup = true;
        break;
      }
    }
    if (dup) {
      ++dup_dropped;
    } else {
      keep.push_back(j);
    }
  }

  // Greedy rank filter, earlier columns win (modified Gram-Schmidt, two passes).
  std::vector<Vec> basis;
  std::vector<int> kept;
  int dep_dropped = 0;
  for (int j : keep) {
    Vec r = X.col(j);
    const double nx = r.norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& b : basis) {
        r -= b.dot(r) * b;
      }
    }
    if (nx == 0.0 || r.norm() <= 1e-8 * nx) {
      ++dep_dropped;
      continue;
    }
    basis.push_back(r / r.norm());
    kept.push_back(j);
  }
  if (kept.empty()) {
    throw DataError("ingest_csv: no independent feature columns remain");
  }

  Mat Xf(p, static_cast<int>(kept.size()));
  std::vector<std::string> kept_names;
  for (size_t j = 0; j < kept.size(); ++j) {
    Xf.col(static_cast<int>(j)) = X.col(kept[j]);
    kept_names.push_back(names[kept[j]]);
  }
  if (report) {
    report->rows_total = total_rows;
    report->rows_used = p;
    report->cols_total = n_raw;
    report->cols_dropped_duplicate = dup_dropped;
    report->cols_dropped_dependent = dep_dropped;
    report->kept_columns = kept_names;
  }
  Vec Y = Eigen::Map<Vec>(labels.data(), p);
  return LogisticTarget(std::move(Xf), std::move(Y));
}

LogisticTarget make_synthetic_logistic(int n, int p, RngStream& rng) {
  Mat X(p, n);
  Vec scale(n);
  for (int j = 0; j < n; ++j) scale[j] = 0.5 + rng.uniform();
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < n; ++j) X(i, j) = scale[j] * rng.normal();
  }
  Vec beta(n);
  for (int j = 0; j < n; ++j) beta[j] = rng.normal() / std::sqrt(static_cast<double>(n));
  Vec Y(p);
  for (int i = 0; i < p; ++i) {
    const double prob = sigmoid(X.row(i).dot(beta));
    Y[i] = rng.uniform() <= prob ? 1.0 : 0.0;
  }
  return LogisticTarget(std::move(X), std::move(Y));
}

}  // namespace frictuner
