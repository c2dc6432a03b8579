#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "layerfem/basis.hpp"

using namespace layerfem;

TEST_CASE("gauss_rule closed forms") {
  QuadratureRule r1 = gauss_rule(1);
  CHECK(r1.nodes[0] == doctest::Approx(0.5));
  CHECK(r1.weights[0] == doctest::Approx(1.0));

  QuadratureRule r2 = gauss_rule(2);
  const double off = 1.0 / (2.0 * std::sqrt(3.0));
  CHECK(r2.nodes[0] == doctest::Approx(0.5 - off).epsilon(1e-14));
  CHECK(r2.nodes[1] == doctest::Approx(0.5 + off).epsilon(1e-14));
  CHECK(r2.weights[0] == doctest::Approx(0.5));
  CHECK(r2.weights[1] == doctest::Approx(0.5));

  double cubic = 0.0;
  for (int i = 0; i < 2; ++i) cubic += r2.weights[i] * std::pow(r2.nodes[i], 3);
  CHECK(cubic == doctest::Approx(0.25).epsilon(1e-15));

  CHECK_THROWS(gauss_rule(0));
}

TEST_CASE("quadrature exactness for monomials up to degree 2n-1") {
  for (int n = 1; n <= 12; ++n) {
    QuadratureRule r = gauss_rule(n);
    double wsum = 0.0;
    for (double w : r.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double integral = 0.0;
      for (int i = 0; i < n; ++i) integral += r.weights[i] * std::pow(r.nodes[i], k);
      CHECK(std::abs(integral - 1.0 / (k + 1)) <= 1e-13 / (k + 1) + 1e-15);
    }
  }
}

TEST_CASE("1D shape functions: hierarchic structure") {
  ShapeTable1D t = shape_values_1d(1, {0.0});
  CHECK(t.values(0, 0) == doctest::Approx(1.0));
  CHECK(t.values(1, 0) == doctest::Approx(0.0));

  ShapeTable1D t3 = shape_values_1d(3, {0.0, 1.0});
  for (int k = 2; k <= 3; ++k) {
    CHECK(std::abs(t3.values(k, 0)) <= 1e-14);
    CHECK(std::abs(t3.values(k, 1)) <= 1e-14);
  }
  CHECK(t3.values(0, 0) == doctest::Approx(1.0));
  CHECK(t3.values(0, 1) == doctest::Approx(0.0));
  CHECK(t3.values(1, 0) == doctest::Approx(0.0));
  CHECK(t3.values(1, 1) == doctest::Approx(1.0));
}

namespace {

// Independent Gram matrix through high-order quadrature.
Eigen::MatrixXd gram_matrix(int p) {
  QuadratureRule r = gauss_rule(2 * p + 4);
  ShapeTable1D t = shape_values_1d(p, r.nodes);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (int q = 0; q < r.size(); ++q)
    for (int i = 0; i <= p; ++i)
      for (int j = 0; j <= p; ++j) g(i, j) += r.weights[q] * t.values(i, q) * t.values(j, q);
  return g;
}

}  // namespace

TEST_CASE("Gram matrix is symmetric positive definite") {
  Eigen::MatrixXd g = gram_matrix(2);
  CHECK((g - g.transpose()).norm() <= 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("linear independence up to p = 10") {
  for (int p = 1; p <= 10; ++p) {
    Eigen::MatrixXd g = gram_matrix(p);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK(std::isfinite(eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff()));
  }
}

TEST_CASE("derivatives match central finite differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.01, 0.99);
  const double h = 1e-6;
  for (int p = 1; p <= 10; ++p) {
    for (int trial = 0; trial < 10; ++trial) {
      const double x = d(rng);
      ShapeTable1D t = shape_values_1d(p, {x - h, x, x + h});
      for (int k = 0; k <= p; ++k) {
        const double fd = (t.values(k, 2) - t.values(k, 0)) / (2 * h);
        CHECK(std::abs(t.derivatives(k, 1) - fd) <= 1e-6);
      }
    }
  }
}

TEST_CASE("tensor shape evaluation") {
  TensorShape s = tensor_shape_eval(1, Vec2(0, 0));
  CHECK(s.values(0) == doctest::Approx(1.0));
  for (int i = 1; i < 4; ++i) CHECK(std::abs(s.values(i)) <= 1e-15);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0, 1);
  for (int trial = 0; trial < 5; ++trial) {
    Vec2 r(d(rng), d(rng));
    TensorShape t = tensor_shape_eval(1, r);
    CHECK(t.values.sum() == doctest::Approx(1.0).epsilon(1e-14));  // partition of unity
  }

  TensorShape c = tensor_shape_eval(1, Vec2(0.5, 0.5));
  // phi_{11}(x,y) = x y
  CHECK(c.gradients(3, 0) == doctest::Approx(0.5));
  CHECK(c.gradients(3, 1) == doctest::Approx(0.5));
}

TEST_CASE("span contains all polynomials of degree p") {
  // Least-squares fit of x^k in the basis must be exact.
  for (int p = 1; p <= 6; ++p) {
    QuadratureRule r = gauss_rule(2 * p + 2);
    ShapeTable1D t = shape_values_1d(p, r.nodes);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (int q = 0; q < r.size(); ++q)
      for (int i = 0; i <= p; ++i)
        for (int j = 0; j <= p; ++j) g(i, j) += r.weights[q] * t.values(i, q) * t.values(j, q);
    for (int k = 0; k <= p; ++k) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 1);
      for (int q = 0; q < r.size(); ++q)
        for (int i = 0; i <= p; ++i)
          rhs(i) += r.weights[q] * std::pow(r.nodes[q], k) * t.values(i, q);
      Eigen::VectorXd coef = g.ldlt().solve(rhs);
      double resid = 0.0;
      for (int q = 0; q < r.size(); ++q) {
        double v = 0.0;
        for (int i = 0; i <= p; ++i) v += coef(i) * t.values(i, q);
        resid = std::max(resid, std::abs(v - std::pow(r.nodes[q], k)));
      }
      CHECK(resid <= 1e-10);
    }
  }
}
