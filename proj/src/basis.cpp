#include "layerfem/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace layerfem {

QuadratureRule gauss_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule: n must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Roots of the Legendre polynomial P_n on (-1,1) by Newton iteration.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);  // x is a descending root; mirror to (0,1)
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.5;
  return rule;
}

void shape_eval_1d(int p, double x, double* val, double* der) {
  const double xi = 2.0 * x - 1.0;
  val[0] = 1.0 - x;
  der[0] = -1.0;
  if (p >= 1) {
    val[1] = x;
    der[1] = 1.0;
  }
  if (p < 2) return;
  // Legendre values L_0..L_p at xi.
  std::vector<double> L(p + 1);
  L[0] = 1.0;
  L[1] = xi;
  for (int k = 2; k <= p; ++k)
    L[k] = ((2 * k - 1) * xi * L[k - 1] - (k - 1) * L[k - 2]) / k;
  for (int k = 2; k <= p; ++k) {
    const double norm = std::sqrt(2.0 * (2 * k - 1));
    val[k] = (L[k] - L[k - 2]) / norm;
    der[k] = norm * L[k - 1];  // d/dx with the (0,1) chain-rule factor folded in
  }
}

ShapeTable1D shape_values_1d(int p, const std::vector<double>& points) {
  if (p < 1) throw std::invalid_argument("shape_values_1d: p must be >= 1");
  ShapeTable1D t;
  const int np = static_cast<int>(points.size());
  t.values.resize(p + 1, np);
  t.derivatives.resize(p + 1, np);
  std::vector<double> v(p + 1), d(p + 1);
  for (int q = 0; q < np; ++q) {
    shape_eval_1d(p, points[q], v.data(), d.data());
    for (int k = 0; k <= p; ++k) {
      t.values(k, q) = v[k];
      t.derivatives(k, q) = d[k];
    }
  }
  return t;
}

TensorShape tensor_shape_eval(int p, const Vec2& ref) {
  TensorShape s;
  const int n1 = p + 1;
  s.values.resize(n1 * n1);
  s.gradients.resize(n1 * n1, 2);
  std::vector<double> vx(n1), dx(n1), vy(n1), dy(n1);
  shape_eval_1d(p, ref.x(), vx.data(), dx.data());
  shape_eval_1d(p, ref.y(), vy.data(), dy.data());
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < n1; ++i) {
      const int idx = j * n1 + i;
      s.values(idx) = vx[i] * vy[j];
      s.gradients(idx, 0) = dx[i] * vy[j];
      s.gradients(idx, 1) = vx[i] * dy[j];
    }
  }
  return s;
}

}  // namespace layerfem
