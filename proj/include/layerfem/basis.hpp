#pragma once

#include <vector>

#include <Eigen/Dense>

#include "layerfem/geometry.hpp"

namespace layerfem {

/// Gauss-Legendre rule on (0,1); exact for polynomials of degree <= 2n-1.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

QuadratureRule gauss_rule(int n);

/// Values and derivatives of the p+1 hierarchic 1D shape functions on (0,1):
/// functions 0,1 are the endpoint hats, functions 2..p are integrated-Legendre
/// bubbles vanishing at both endpoints. Row k holds function k at the points.
struct ShapeTable1D {
  Eigen::MatrixXd values;       // (p+1) x npoints
  Eigen::MatrixXd derivatives;  // (p+1) x npoints
};

ShapeTable1D shape_values_1d(int p, const std::vector<double>& points);

/// Single-point 1D evaluation (value and derivative of all p+1 functions).
void shape_eval_1d(int p, double x, double* values, double* derivatives);

/// Values and reference gradients of the (p+1)^2 tensor-product functions
/// phi_{ij}(x,y) = phi_i(x) phi_j(y) at one reference point. Index = j*(p+1)+i.
struct TensorShape {
  Eigen::VectorXd values;
  Eigen::Matrix<double, Eigen::Dynamic, 2> gradients;
};

TensorShape tensor_shape_eval(int p, const Vec2& ref);

}  // namespace layerfem
