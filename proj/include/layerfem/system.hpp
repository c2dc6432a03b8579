#pragma once

#include <functional>
#include <iosfwd>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "layerfem/space.hpp"

namespace layerfem {

/// Data of the reaction-diffusion problem -eps^2 div(A grad u) + c u = f.
struct ProblemData {
  double eps = 1.0;
  std::function<Mat2(const Vec2&)> A = [](const Vec2&) { return Mat2(Mat2::Identity()); };
  std::function<double(const Vec2&)> c = [](const Vec2&) { return 1.0; };
  std::function<double(const Vec2&)> f = [](const Vec2&) { return 0.0; };
  double alpha0 = 1.0;
  double c0 = 1.0;
  bool constant_coefficients = true;  // A and c constant in space (f may vary)

  /// Enforces eps in (0,1] and spot-checks ellipticity on a sample grid.
  void validate() const;
};

struct SparseSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

struct LocalMatrices {
  Eigen::MatrixXd K;
  Eigen::VectorXd F;
};

/// Local stiffness+mass matrix and load vector on one element, integrated
/// with a tensor Gauss rule of `quad_order` points per direction.
LocalMatrices element_matrix(const Mesh& mesh, int elem, int p, const ProblemData& problem,
                             int quad_order);

int default_quad_order(int p, int quad_boost = 0);

SparseSystem assemble(const FESpace& space, const ProblemData& problem, int quad_order = 0);

struct SolveResult {
  Eigen::VectorXd x;
  double residual = 0.0;  // relative, ||Ax-b||/||b||
  int refinements = 0;
};

/// Sparse Cholesky with diagonal equilibration and iterative refinement.
/// Throws on non-SPD matrices; reports the achieved residual when the
/// tolerance cannot be met.
SolveResult solve(const SparseSystem& system, double tol = 1e-12);

void export_coo(const SparseSystem& system, std::ostream& out);

}  // namespace layerfem
