#include "layerfem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "layerfem/basis.hpp"

namespace layerfem {

namespace {

bool contains(const std::array<Vec2, 4>& quad, const Vec2& p, double tol) {
  Vec2 r = quad_inverse(quad, p);
  return r.x() >= -tol && r.x() <= 1 + tol && r.y() >= -tol && r.y() <= 1 + tol &&
         (quad_map(quad, r) - p).norm() <= 1e-10;
}

}  // namespace

std::pair<Mesh, std::vector<int>> build_reference_mesh(const Mesh& study, int extra_levels) {
  std::vector<PatternAssignment> assignment;
  for (const PatternMesh& pm : study.patches) assignment.push_back({pm.kind, pm.mirrored});

  MeshParams fine_params = study.params;
  for (int& L : fine_params.levels) L += extra_levels;
  Mesh fine = generate_mesh(study.macro, assignment, fine_params, /*validate=*/false);
  ConformityReport rep = check_conformity(fine);
  if (!rep.pass)
    throw std::runtime_error("build_reference_mesh: refined mesh not conforming: " +
                             rep.violations.front());

  // Owner lookup within the same patch; the constructions share every cell
  // boundary, so each fine cell sits inside exactly one study cell.
  std::vector<std::vector<int>> by_macro(study.macro->macros.size());
  for (int e = 0; e < study.n_elements(); ++e)
    by_macro[study.elements[e].macro].push_back(e);

  std::vector<int> owner(fine.n_elements(), -1);
  for (int ef = 0; ef < fine.n_elements(); ++ef) {
    const Element& el = fine.elements[ef];
    Vec2 centroid = quad_map(el.ref_corners, Vec2(0.5, 0.5));
    for (int ec : by_macro[el.macro]) {
      if (contains(study.elements[ec].ref_corners, centroid, 1e-12)) {
        owner[ef] = ec;
        break;
      }
    }
    if (owner[ef] < 0)
      throw std::runtime_error("build_reference_mesh: fine element has no owner (not nested)");
  }
  return {std::move(fine), std::move(owner)};
}

ReferenceSolution build_reference(const Mesh& study, const ProblemData& problem, int p_max,
                                  int quad_boost) {
  ReferenceSolution ref;
  ref.p_ref = 2 * p_max;
  auto [fine, owner] = build_reference_mesh(study);
  ref.mesh = std::make_shared<Mesh>(std::move(fine));
  ref.owner = std::move(owner);
  ref.space = build_space(ref.mesh, ref.p_ref);
  SparseSystem sys = assemble(ref.space, problem, default_quad_order(ref.p_ref, quad_boost));
  SolveResult sol = solve(sys);
  ref.coeffs = sol.x;
  ref.solve_residual = sol.residual;
  return ref;
}

ErrorReport error_norms(const FESpace& space, const Eigen::VectorXd& coeffs,
                        const ReferenceSolution& ref, const ProblemData& problem) {
  const Mesh& fine = *ref.mesh;
  const Mesh& coarse = *space.mesh;
  if (fine.macro.get() != coarse.macro.get())
    throw std::invalid_argument("error_norms: meshes built on different macro triangulations");
  if (static_cast<int>(ref.owner.size()) != fine.n_elements())
    throw std::invalid_argument("error_norms: owner map size mismatch");
  // Nesting guard: fine corners must pull back into the owner's reference cell.
  for (int ef = 0; ef < fine.n_elements(); ef += std::max(1, fine.n_elements() / 16)) {
    const auto& oc = coarse.elements[ref.owner[ef]].ref_corners;
    for (const Vec2& c : fine.elements[ef].ref_corners) {
      Vec2 r = quad_inverse(oc, c);
      if (r.x() < -1e-9 || r.x() > 1 + 1e-9 || r.y() < -1e-9 || r.y() > 1 + 1e-9)
        throw std::invalid_argument("error_norms: meshes are not nested");
    }
  }

  const int q = ref.p_ref + 2;
  QuadratureRule rule = gauss_rule(q);
  double l2 = 0.0, h1 = 0.0, energy = 0.0, linf = 0.0;

  for (int ef = 0; ef < fine.n_elements(); ++ef) {
    const int ec = ref.owner[ef];
    const auto& fine_corners = fine.elements[ef].ref_corners;
    const auto& coarse_corners = coarse.elements[ec].ref_corners;
    for (int a = 0; a < q; ++a) {
      for (int b = 0; b < q; ++b) {
        const Vec2 rf(rule.nodes[a], rule.nodes[b]);
        const double det = fine.jacobian(ef, rf).determinant();
        const double w = rule.weights[a] * rule.weights[b] * det;
        const Vec2 patch_pt = quad_map(fine_corners, rf);
        const Vec2 rc = quad_inverse(coarse_corners, patch_pt);
        EvalResult uref = evaluate(ref.space, ref.coeffs, ef, rf);
        EvalResult uN = evaluate(space, coeffs, ec, rc);
        const double e = uN.value - uref.value;
        const Vec2 ge = uN.gradient - uref.gradient;
        const Vec2 phys = fine.map_point(ef, rf);
        l2 += w * e * e;
        h1 += w * ge.squaredNorm();
        energy += w * (problem.eps * problem.eps * ge.dot(problem.A(phys) * ge) +
                       problem.c(phys) * e * e);
      }
    }
    // Max-norm sampling on a uniform grid.
    for (int a = 0; a < q; ++a) {
      for (int b = 0; b < q; ++b) {
        const Vec2 rf(a / (q - 1.0), b / (q - 1.0));
        const Vec2 rc = quad_inverse(coarse_corners, quad_map(fine_corners, rf));
        const double e =
            evaluate(space, coeffs, ec, rc).value - evaluate(ref.space, ref.coeffs, ef, rf).value;
        linf = std::max(linf, std::abs(e));
      }
    }
  }

  ErrorReport rep;
  rep.p = space.p;
  rep.eps = problem.eps;
  rep.n_dofs = space.n_dofs;
  rep.l2_error = std::sqrt(l2);
  rep.balanced_seminorm_error = std::sqrt(problem.eps) * std::sqrt(h1);
  rep.energy_error = std::sqrt(energy);
  rep.linf_error = linf;
  return rep;
}

Eigen::VectorXd ProjectionResult::as_full(int n_dofs) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n_dofs);
  for (size_t i = 0; i < dofs.size(); ++i) full[dofs[i]] = values[i];
  return full;
}

ProjectionResult weighted_l2_projection(const FESpace& space,
                                        const std::function<double(const Vec2&)>& weight,
                                        const FieldEvaluator& u, int quad_order) {
  const Mesh& mesh = *space.mesh;
  std::vector<int> large;
  for (int e = 0; e < mesh.n_elements(); ++e)
    if (mesh.elements[e].tag == RegionTag::large) large.push_back(e);
  if (large.empty())
    throw std::invalid_argument("weighted_l2_projection: mesh has no large elements");

  std::vector<int> dof_index(space.n_dofs, -1);
  std::vector<int> dofs;
  for (int e : large)
    for (int g : space.dofs[e])
      if (g >= 0 && dof_index[g] < 0) {
        dof_index[g] = 0;
        dofs.push_back(g);
      }
  std::sort(dofs.begin(), dofs.end());
  for (size_t i = 0; i < dofs.size(); ++i) dof_index[dofs[i]] = static_cast<int>(i);
  const int nd = static_cast<int>(dofs.size());

  const int q = quad_order > 0 ? quad_order : default_quad_order(space.p);
  QuadratureRule rule = gauss_rule(q);
  ShapeTable1D tab = shape_values_1d(space.p, rule.nodes);
  const int n1 = space.p + 1;

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nd);
  Eigen::VectorXd phi(n1 * n1);
  for (int e : large) {
    const auto& gd = space.dofs[e];
    const auto& sg = space.signs[e];
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n1 * n1, n1 * n1);
    Eigen::VectorXd F = Eigen::VectorXd::Zero(n1 * n1);
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        const Vec2 ref(rule.nodes[a], rule.nodes[b]);
        const double det = mesh.jacobian(e, ref).determinant();
        const Vec2 phys = mesh.map_point(e, ref);
        const double w = rule.weights[a] * rule.weights[b] * det * weight(phys);
        for (int j = 0; j < n1; ++j)
          for (int i = 0; i < n1; ++i) phi[j * n1 + i] = tab.values(i, a) * tab.values(j, b);
        const double uw = w * u(e, ref, phys);
        for (int l1 = 0; l1 < n1 * n1; ++l1) {
          F[l1] += uw * phi[l1];
          for (int l2 = 0; l2 < n1 * n1; ++l2) M(l1, l2) += w * phi[l1] * phi[l2];
        }
      }
    for (int l1 = 0; l1 < n1 * n1; ++l1) {
      if (gd[l1] < 0) continue;
      const int r = dof_index[gd[l1]];
      rhs[r] += sg[l1] * F[l1];
      for (int l2 = 0; l2 < n1 * n1; ++l2) {
        if (gd[l2] < 0) continue;
        trip.emplace_back(r, dof_index[gd[l2]], sg[l1] * sg[l2] * M(l1, l2));
      }
    }
  }

  Eigen::SparseMatrix<double> M(nd, nd);
  M.setFromTriplets(trip.begin(), trip.end());
  SparseSystem sys{M, rhs};
  SolveResult sol = solve(sys, 1e-12);

  ProjectionResult res;
  res.dofs = dofs;
  res.values = sol.x;
  res.residual = sol.residual;
  return res;
}

}  // namespace layerfem
