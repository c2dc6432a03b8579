#include "layerfem/space.hpp"

#include <stdexcept>

#include "layerfem/basis.hpp"

namespace layerfem {

FESpace build_space(std::shared_ptr<const Mesh> mesh, int p) {
  if (p < 1) throw std::invalid_argument("build_space: p must be >= 1");
  ConformityReport rep = check_conformity(*mesh);
  if (!rep.pass)
    throw std::invalid_argument("build_space: non-conforming mesh: " + rep.violations.front());

  FESpace s;
  s.mesh = mesh;
  s.p = p;

  int next = 0;
  s.vertex_dof.assign(mesh->vertex_pos.size(), -1);
  for (size_t v = 0; v < mesh->vertex_pos.size(); ++v)
    if (!mesh->vertex_on_boundary[v]) s.vertex_dof[v] = next++;

  s.edge_dof_base.assign(mesh->edges.size(), -1);
  if (p >= 2)
    for (size_t e = 0; e < mesh->edges.size(); ++e)
      if (!mesh->edges[e].boundary) {
        s.edge_dof_base[e] = next;
        next += p - 1;
      }

  s.cell_dof_base.assign(mesh->n_elements(), 0);
  for (int e = 0; e < mesh->n_elements(); ++e) {
    s.cell_dof_base[e] = next;
    next += (p - 1) * (p - 1);
  }
  s.n_dofs = next;

  const int n1 = p + 1;
  s.dofs.assign(mesh->n_elements(), std::vector<int>(n1 * n1, -1));
  s.signs.assign(mesh->n_elements(), std::vector<double>(n1 * n1, 1.0));
  for (int e = 0; e < mesh->n_elements(); ++e) {
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n1; ++i) {
        const int loc = j * n1 + i;
        if (i < 2 && j < 2) {
          const int corner = (j == 0) ? (i == 0 ? 0 : 1) : (i == 0 ? 3 : 2);
          s.dofs[e][loc] = s.vertex_dof[mesh->elem_vertex[e][corner]];
        } else if (j < 2) {
          const int side = (j == 0) ? 0 : 2;
          const int k = i;
          const int base = s.edge_dof_base[mesh->elem_edges[e][side]];
          s.dofs[e][loc] = (base < 0) ? -1 : base + (k - 2);
          if (!mesh->elem_edge_forward[e][side] && (k % 2 == 1)) s.signs[e][loc] = -1.0;
        } else if (i < 2) {
          const int side = (i == 0) ? 3 : 1;
          const int k = j;
          const int base = s.edge_dof_base[mesh->elem_edges[e][side]];
          s.dofs[e][loc] = (base < 0) ? -1 : base + (k - 2);
          if (!mesh->elem_edge_forward[e][side] && (k % 2 == 1)) s.signs[e][loc] = -1.0;
        } else {
          s.dofs[e][loc] = s.cell_dof_base[e] + (j - 2) * (p - 1) + (i - 2);
        }
      }
    }
  }
  return s;
}

EvalResult evaluate(const FESpace& space, const Eigen::VectorXd& coeffs, int elem,
                    const Vec2& ref) {
  if (coeffs.size() != space.n_dofs)
    throw std::invalid_argument("evaluate: coefficient length mismatch");
  const int n1 = space.p + 1;
  std::vector<double> vx(n1), dx(n1), vy(n1), dy(n1);
  shape_eval_1d(space.p, ref.x(), vx.data(), dx.data());
  shape_eval_1d(space.p, ref.y(), vy.data(), dy.data());

  double value = 0.0;
  Vec2 gref = Vec2::Zero();
  const auto& gd = space.dofs[elem];
  const auto& sg = space.signs[elem];
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < n1; ++i) {
      const int loc = j * n1 + i;
      const int g = gd[loc];
      if (g < 0) continue;
      const double c = sg[loc] * coeffs[g];
      value += c * vx[i] * vy[j];
      gref.x() += c * dx[i] * vy[j];
      gref.y() += c * vx[i] * dy[j];
    }
  }
  EvalResult r;
  r.value = value;
  Mat2 J = space.mesh->jacobian(elem, ref);
  r.gradient = J.inverse().transpose() * gref;
  return r;
}

}  // namespace layerfem
