#pragma once

#include <functional>
#include <memory>
#include <string>

#include "layerfem/system.hpp"

namespace layerfem {

struct ErrorReport {
  int p = 0;
  double eps = 1.0;
  int n_dofs = 0;
  double l2_error = 0.0;
  double balanced_seminorm_error = 0.0;  // sqrt(eps) * |u_N - u_ref|_{H^1}
  double energy_error = 0.0;
  double linf_error = 0.0;
  double wall_time = 0.0;
};

/// Discrete stand-in for the unknown exact solution: same macro layout with
/// two extra geometric levels and degree 2*p_max, nested cell by cell in the
/// study mesh.
struct ReferenceSolution {
  std::shared_ptr<const Mesh> mesh;
  FESpace space;
  Eigen::VectorXd coeffs;
  std::vector<int> owner;  // fine element -> coarse element
  int p_ref = 0;
  double solve_residual = 0.0;
};

ReferenceSolution build_reference(const Mesh& study_mesh, const ProblemData& problem,
                                  int p_max, int quad_boost = 0);

/// Builds only the refined mesh + owner map (for nesting tests).
std::pair<Mesh, std::vector<int>> build_reference_mesh(const Mesh& study_mesh, int extra_levels = 2);

ErrorReport error_norms(const FESpace& space, const Eigen::VectorXd& coeffs,
                        const ReferenceSolution& ref, const ProblemData& problem);

/// Evaluates a target function at (element, reference point, physical point).
using FieldEvaluator = std::function<double(int, const Vec2&, const Vec2&)>;

struct ProjectionResult {
  std::vector<int> dofs;      // global dof ids active on the large-element region
  Eigen::VectorXd values;     // coefficients, aligned with `dofs`
  double residual = 0.0;      // relative orthogonality residual
  Eigen::VectorXd as_full(int n_dofs) const;
};

/// Weighted L2 projection onto the restriction of the space to the large
/// elements: int_{Omega0} c (u - Pu) v = 0 for all restricted v.
ProjectionResult weighted_l2_projection(const FESpace& space,
                                        const std::function<double(const Vec2&)>& weight,
                                        const FieldEvaluator& u, int quad_order = 0);

}  // namespace layerfem
