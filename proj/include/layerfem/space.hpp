#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "layerfem/mesh.hpp"

namespace layerfem {

/// Globally continuous mapped Q_p space with homogeneous Dirichlet
/// constraints eliminated. Local dofs are tensor-ordered, local = j*(p+1)+i;
/// vertex dofs sit at i,j in {0,1}, edge dofs carry the hierarchic 1D index
/// k >= 2, interior dofs the rest. Edge functions are oriented along the
/// canonical (lower vertex id -> higher) direction; odd bubbles flip sign on
/// reversed elements.
struct FESpace {
  std::shared_ptr<const Mesh> mesh;
  int p = 1;
  int n_dofs = 0;

  std::vector<int> vertex_dof;     // -1 when constrained
  std::vector<int> edge_dof_base;  // -1 when constrained, else p-1 dofs
  std::vector<int> cell_dof_base;

  std::vector<std::vector<int>> dofs;      // element -> local -> global (-1 constrained)
  std::vector<std::vector<double>> signs;  // element -> local -> +-1
};

FESpace build_space(std::shared_ptr<const Mesh> mesh, int p);

struct EvalResult {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();  // physical gradient
};

EvalResult evaluate(const FESpace& space, const Eigen::VectorXd& coeffs, int elem,
                    const Vec2& ref);

}  // namespace layerfem
