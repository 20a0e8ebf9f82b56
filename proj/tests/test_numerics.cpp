#include <doctest.h>

#include <cmath>

#include "seqmatch/errors.hpp"
#include "seqmatch/numerics.hpp"
#include "seqmatch/rng.hpp"
#include "support/oracles.hpp"

using namespace seqmatch;

TEST_CASE("affine: identity and bias passthrough") {
  Matrix eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  CHECK(affine(eye, {1.0, 2.0}, {0.0, 0.0}) == Vector{1.0, 2.0});

  Matrix zero(1, 2);
  CHECK(affine(zero, {5.0, -3.0}, {3.0}) == Vector{3.0});
}

TEST_CASE("affine matches the scalar triple-loop oracle") {
  Rng rng(7);
  Matrix w(3, 2);
  for (double& v : w.data) v = rng.uniform(-2.0, 2.0);
  Vector x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
  Vector b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

  Vector got = affine(w, x, b);
  Vector want = test::oracle_affine(w, x, b);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("affine rejects mismatched shapes naming both operands") {
  Matrix w(3, 2);
  CHECK_THROWS_WITH_AS(affine(w, {1.0, 2.0, 3.0}, {0, 0, 0}),
                       doctest::Contains("3x2"), ShapeError);
  CHECK_THROWS_AS(affine(w, {1.0, 2.0}, {0.0}), ShapeError);
}

TEST_CASE("affine distributes over vector addition") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t rows = 1 + rng.index(6), cols = 1 + rng.index(6);
    Matrix w(rows, cols);
    for (double& v : w.data) v = rng.uniform(-3.0, 3.0);
    Vector x(cols), y(cols), zero(rows, 0.0);
    for (double& v : x) v = rng.uniform(-3.0, 3.0);
    for (double& v : y) v = rng.uniform(-3.0, 3.0);

    Vector xy(cols);
    for (std::size_t i = 0; i < cols; ++i) xy[i] = x[i] + y[i];
    Vector lhs = affine(w, xy, zero);
    Vector rx = affine(w, x, zero), ry = affine(w, y, zero);
    for (std::size_t i = 0; i < rows; ++i) {
      CHECK(std::fabs(lhs[i] - (rx[i] + ry[i])) <= 1e-9);
    }
  }
}

TEST_CASE("sigmoid: analytic points and saturation contract") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-14));

  double deep = sigmoid(-750.0);
  CHECK(deep > 0.0);
  CHECK(deep <= 1e-300);
  CHECK(sigmoid(750.0) < 1.0);
  CHECK(sigmoid(750.0) > 1.0 - 1e-15);
}

TEST_CASE("sigmoid symmetry: s(z) + s(-z) = 1 over wide range") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    double z = rng.uniform(-40.0, 40.0);
    CHECK(std::fabs(sigmoid(z) + sigmoid(-z) - 1.0) <= 1e-12);
  }
}

TEST_CASE("softmax: equal logits, analytic case, large-logit stability") {
  Vector u = softmax(Vector{4.2, 4.2, 4.2});
  for (double v : u) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-14));

  Vector w = softmax(Vector{std::log(2.0), 0.0});
  CHECK(w[0] == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));

  Vector big = softmax(Vector{1000.0, 0.0});
  CHECK(big[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(big[1] >= 0.0);
  CHECK(std::isfinite(big[0]));

  CHECK_THROWS_AS(softmax(Vector{}), ArgumentError);
}

TEST_CASE("softmax property: positive entries summing to one") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.index(12);
    Vector logits(n);
    for (double& v : logits) v = rng.uniform(-300.0, 300.0);
    Vector p = softmax(logits);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("finite_diff_grad: analytic derivative and constant function") {
  auto square = [](const Vector& x) { return x[0] * x[0]; };
  Vector g = finite_diff_grad(square, {3.0}, 1e-5);
  CHECK(std::fabs(g[0] - 6.0) <= 1e-6);

  auto constant = [](const Vector&) { return 4.0; };
  Vector gc = finite_diff_grad(constant, {1.0, -2.0, 0.5}, 1e-5);
  for (double v : gc) CHECK(v == 0.0);
}

TEST_CASE("finite_diff_grad of a quadratic form matches (A + A^T) x") {
  Rng rng(23);
  const std::size_t n = 5;
  Matrix a(n, n);
  for (double& v : a.data) v = rng.uniform(-2.0, 2.0);
  Vector x(n);
  for (double& v : x) v = rng.uniform(-2.0, 2.0);

  auto quad = [&](const Vector& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) acc += v[i] * a(i, j) * v[j];
    }
    return acc;
  };
  Vector numeric = finite_diff_grad(quad, x, 1e-5);
  for (std::size_t i = 0; i < n; ++i) {
    double expected = 0.0;
    for (std::size_t j = 0; j < n; ++j) expected += (a(i, j) + a(j, i)) * x[j];
    CHECK(numeric[i] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("finite_diff_grad flags non-finite evaluations with the coordinate") {
  auto bad = [](const Vector& x) { return x[1] > 0.5 ? std::log(-1.0) : 1.0; };
  CHECK_THROWS_WITH_AS(finite_diff_grad(bad, {0.0, 0.5}, 1.0),
                       doctest::Contains("coordinate 1"), NumericError);
}
