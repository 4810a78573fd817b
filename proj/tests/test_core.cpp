#include <doctest.h>

#include <cmath>

#include "frictuner/core.hpp"

using namespace frictuner;

TEST_CASE("symmetrize examples") {
  Mat a(2, 2);
  a << 0, 2, 0, 0;
  CHECK(symmetrize(a).mat() == (Mat(2, 2) << 0, 1, 1, 0).finished());

  CHECK(symmetrize(Mat::Identity(2, 2)).mat() == Mat::Identity(2, 2));

  Mat b(2, 2);
  b << 1, 3, 1, 2;
  Mat expect(2, 2);
  expect << 1, 2, 2, 2;
  CHECK(symmetrize(b).mat() == expect);

  CHECK_THROWS_AS(symmetrize(Mat::Zero(2, 3)), DimensionError);
}

TEST_CASE("project_pd examples") {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -0.5;
  const FrictionMatrix p = project_pd(SymMatrix(d), 0.2);
  CHECK(p.mat()(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.mat()(1, 1) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::abs(p.mat()(0, 1)) < 1e-14);

  const FrictionMatrix id = project_pd(SymMatrix(Mat::Identity(3, 3)), 0.2);
  CHECK((id.mat() - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

  Mat offdiag(2, 2);
  offdiag << 0, 1, 1, 0;  // eigenvalues {1, -1} -> {1, 0.2}
  const FrictionMatrix q = project_pd(SymMatrix(offdiag), 0.2);
  Mat expect(2, 2);
  expect << 0.6, 0.4, 0.4, 0.6;
  CHECK((q.mat() - expect).cwiseAbs().maxCoeff() < 1e-12);

  Mat bad(2, 2);
  bad << 1.0, std::nan(""), std::nan(""), 1.0;
  CHECK_THROWS_AS(project_pd(SymMatrix(bad), 0.2), NumericError);
}

TEST_CASE("project_pd properties") {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 1 + static_cast<int>(rng.uniform_below(4));
    Mat a(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    }
    const SymMatrix s = symmetrize(a);
    const double mu = 0.1 + rng.uniform();
    const FrictionMatrix p = project_pd(s, mu);
    auto [vals, vecs] = sym_eigs(p.sym());
    CHECK(vals.minCoeff() >= mu - 1e-10);

    // Idempotence.
    const FrictionMatrix p2 = project_pd(p.sym(), mu);
    CHECK((p2.mat() - p.mat()).cwiseAbs().maxCoeff() < 1e-12);

    // No-op when already above the floor.
    auto [sv, _] = sym_eigs(s);
    if (sv.minCoeff() >= mu) {
      CHECK((p.mat() - s.mat()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("spd_matrix_function examples and homomorphism") {
  const double dt = 0.1;
  const FrictionMatrix id = FrictionMatrix::scaled_identity(3, 1.0, 0.5);
  const SymMatrix e = spd_matrix_function(id, [dt](double lam) { return std::exp(-dt * lam); });
  CHECK((e.mat() - std::exp(-0.1) * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);

  RngStream rng(12, 0);
  Mat a(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
  }
  const FrictionMatrix g = project_pd(symmetrize(a), 0.3);
  const SymMatrix ident = spd_matrix_function(g, [](double lam) { return lam; });
  CHECK((ident.mat() - g.mat()).cwiseAbs().maxCoeff() < 1e-12);

  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 4.0;
  const FrictionMatrix gd(SymMatrix(d), 0.5);
  const SymMatrix s = spd_matrix_function(gd, [](double lam) {
    return std::sqrt(1.0 - std::exp(-2.0 * 0.1 * lam));
  });
  CHECK(s.mat()(0, 0) == doctest::Approx(std::sqrt(1 - std::exp(-0.2))).epsilon(1e-12));
  CHECK(s.mat()(1, 1) == doctest::Approx(std::sqrt(1 - std::exp(-0.8))).epsilon(1e-12));

  // exp(G) * exp(-G) == I
  const SymMatrix ep = spd_matrix_function(g, [](double lam) { return std::exp(lam); });
  const SymMatrix em = spd_matrix_function(g, [](double lam) { return std::exp(-lam); });
  CHECK((ep.mat() * em.mat() - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);

  // NaN from the scalar function surfaces as a numeric error.
  CHECK_THROWS_AS(spd_matrix_function(g, [](double) { return std::nan(""); }),
                  NumericError);
}

TEST_CASE("rng reproducibility and stream separation") {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  bool all_equal = true;
  bool any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.normal();
    all_equal = all_equal && (x == b.normal());
    any_diff = any_diff || (x != c.normal());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng normal moments") {
  RngStream rng(1234, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
    sum4 += x * x * x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(sum4 / n == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("friction matrix floor validation") {
  CHECK_THROWS_AS(FrictionMatrix(SymMatrix(0.1 * Mat::Identity(2, 2)), 0.2),
                  NumericError);
  CHECK_THROWS_AS(FrictionMatrix(SymMatrix(Mat::Identity(2, 2)), -1.0), ConfigError);
}
