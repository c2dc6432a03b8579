#include "layerfem/system.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "layerfem/basis.hpp"

namespace layerfem {

void ProblemData::validate() const {
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::invalid_argument("ProblemData: eps must be in (0,1]");
  for (int i = 0; i <= 4; ++i) {
    for (int j = 0; j <= 4; ++j) {
      Vec2 x(i / 4.0, j / 4.0);
      Mat2 a = A(x);
      if (std::abs(a(0, 1) - a(1, 0)) > 1e-12 * (1.0 + a.norm()))
        throw std::invalid_argument("ProblemData: A must be symmetric");
      Eigen::SelfAdjointEigenSolver<Mat2> eig(a);
      if (eig.eigenvalues().minCoeff() < alpha0 - 1e-12)
        throw std::invalid_argument("ProblemData: A violates the ellipticity bound alpha0");
      if (c(x) < c0 - 1e-12)
        throw std::invalid_argument("ProblemData: c violates the lower bound c0");
    }
  }
}

int default_quad_order(int p, int quad_boost) { return p + 2 + quad_boost; }

namespace {

struct Tables1D {
  Eigen::MatrixXd v, d;  // (p+1) x q
  std::vector<double> w, x;
};

Tables1D make_tables(int p, int q) {
  QuadratureRule rule = gauss_rule(q);
  ShapeTable1D t = shape_values_1d(p, rule.nodes);
  return {t.values, t.derivatives, rule.weights, rule.nodes};
}

bool vertical_sided(const std::array<Vec2, 4>& c) {
  return c[0].x() == c[3].x() && c[1].x() == c[2].x();
}
bool horizontal_sided(const std::array<Vec2, 4>& c) {
  return c[0].y() == c[1].y() && c[2].y() == c[3].y();
}

// Separable assembly on a vertical-sided cell Q(x,y) = (X(x), (1-y)Yb(x)+y*Yt(x))
// under an affine macro map with constant coefficients. Exactly reproduces the
// tensor Gauss sum of the generic path, factored per direction.
void assemble_separable_vertical(const Mesh& mesh, int elem, const ProblemData& prob,
                                 const Tables1D& T, Eigen::MatrixXd& K) {
  const Element& el = mesh.elements[elem];
  const auto& c = el.ref_corners;
  const Mat2 B = mesh.macro->macros[el.macro].map.jacobian(Vec2(0.5, 0.5));
  const double detB = B.determinant();
  const Mat2 Binv = B.inverse();
  const Mat2 Aconst = prob.A(mesh.map_point(elem, Vec2(0.5, 0.5)));
  const Mat2 C = Binv * Aconst * Binv.transpose() * detB;
  const double cval = prob.c(mesh.map_point(elem, Vec2(0.5, 0.5)));

  const double Xp = c[1].x() - c[0].x();
  const double Ybp = c[1].y() - c[0].y();
  const double Ytp = c[2].y() - c[3].y();
  const double Hp = Ytp - Ybp;
  const int q = static_cast<int>(T.w.size());
  Eigen::VectorXd wH(q), winvH(q), w1(q), wy(q), wy2(q);
  for (int a = 0; a < q; ++a) {
    const double xa = T.x[a];
    const double H = (c[3].y() - c[0].y()) * (1.0 - xa) + (c[2].y() - c[1].y()) * xa;
    wH[a] = T.w[a] * H;
    winvH[a] = T.w[a] / H;
    w1[a] = T.w[a];
    wy[a] = T.w[a] * xa;
    wy2[a] = T.w[a] * xa * xa;
  }
  auto mat = [&](const Eigen::MatrixXd& L, const Eigen::VectorXd& wgt,
                 const Eigen::MatrixXd& R) {
    return Eigen::MatrixXd(L * wgt.asDiagonal() * R.transpose());
  };
  // x-direction integrals
  Eigen::MatrixXd XHdd = mat(T.d, wH, T.d);
  Eigen::MatrixXd Xdv = mat(T.d, w1, T.v);
  Eigen::MatrixXd XiHvv = mat(T.v, winvH, T.v);
  Eigen::MatrixXd XHvv = mat(T.v, wH, T.v);
  // y-direction integrals (plain, y- and y^2-weighted)
  Eigen::MatrixXd Yvv = mat(T.v, w1, T.v);
  Eigen::MatrixXd Yvd = mat(T.v, w1, T.d);
  Eigen::MatrixXd Yvd_y = mat(T.v, wy, T.d);
  Eigen::MatrixXd Ydd = mat(T.d, w1, T.d);
  Eigen::MatrixXd Ydd_y = mat(T.d, wy, T.d);
  Eigen::MatrixXd Ydd_y2 = mat(T.d, wy2, T.d);

  const double e2 = prob.eps * prob.eps;
  const double t1 = C(0, 0) / Xp;
  const double a12 = (-Ybp * C(0, 0) + Xp * C(0, 1)) / Xp;
  const double b12 = -Hp * C(0, 0) / Xp;
  const double A22 = (Ybp * Ybp * C(0, 0) - 2 * Xp * Ybp * C(0, 1) + Xp * Xp * C(1, 1)) / Xp;
  const double B22 = (2 * Ybp * Hp * C(0, 0) - 2 * Xp * Hp * C(0, 1)) / Xp;
  const double G22 = Hp * Hp * C(0, 0) / Xp;

  const int n1 = static_cast<int>(T.v.rows());
  for (int j1 = 0; j1 < n1; ++j1)
    for (int i1 = 0; i1 < n1; ++i1) {
      const int l1 = j1 * n1 + i1;
      for (int j2 = 0; j2 < n1; ++j2)
        for (int i2 = 0; i2 < n1; ++i2) {
          const int l2 = j2 * n1 + i2;
          double stiff = t1 * XHdd(i1, i2) * Yvv(j1, j2);
          stiff += a12 * (Xdv(i1, i2) * Yvd(j1, j2) + Xdv(i2, i1) * Yvd(j2, j1));
          stiff += b12 * (Xdv(i1, i2) * Yvd_y(j1, j2) + Xdv(i2, i1) * Yvd_y(j2, j1));
          stiff += XiHvv(i1, i2) *
                   (A22 * Ydd(j1, j2) + B22 * Ydd_y(j1, j2) + G22 * Ydd_y2(j1, j2));
          K(l1, l2) += e2 * stiff + cval * Xp * XHvv(i1, i2) * Yvv(j1, j2);
        }
    }
}

// Separable assembly on a horizontal-sided cell
// Q(x,y) = ((1-x)Xl(y) + x*Xr(y), Y(y)).
void assemble_separable_horizontal(const Mesh& mesh, int elem, const ProblemData& prob,
                                   const Tables1D& T, Eigen::MatrixXd& K) {
  const Element& el = mesh.elements[elem];
  const auto& c = el.ref_corners;
  const Mat2 B = mesh.macro->macros[el.macro].map.jacobian(Vec2(0.5, 0.5));
  const double detB = B.determinant();
  const Mat2 Binv = B.inverse();
  const Mat2 Aconst = prob.A(mesh.map_point(elem, Vec2(0.5, 0.5)));
  const Mat2 C = Binv * Aconst * Binv.transpose() * detB;
  const double cval = prob.c(mesh.map_point(elem, Vec2(0.5, 0.5)));

  const double Yp = c[3].y() - c[0].y();
  const double Xlp = c[3].x() - c[0].x();
  const double Xrp = c[2].x() - c[1].x();
  const double Wp = Xrp - Xlp;
  const int q = static_cast<int>(T.w.size());
  Eigen::VectorXd wW(q), winvW(q), w1(q), wx(q), wx2(q);
  for (int a = 0; a < q; ++a) {
    const double ya = T.x[a];
    const double W = (c[1].x() - c[0].x()) * (1.0 - ya) + (c[2].x() - c[3].x()) * ya;
    wW[a] = T.w[a] * W;
    winvW[a] = T.w[a] / W;
    w1[a] = T.w[a];
    wx[a] = T.w[a] * ya;
    wx2[a] = T.w[a] * ya * ya;
  }
  auto mat = [&](const Eigen::MatrixXd& L, const Eigen::VectorXd& wgt,
                 const Eigen::MatrixXd& R) {
    return Eigen::MatrixXd(L * wgt.asDiagonal() * R.transpose());
  };
  Eigen::MatrixXd Xdd = mat(T.d, w1, T.d);
  Eigen::MatrixXd Xdd_x = mat(T.d, wx, T.d);
  Eigen::MatrixXd Xdd_x2 = mat(T.d, wx2, T.d);
  Eigen::MatrixXd Xdv = mat(T.d, w1, T.v);
  Eigen::MatrixXd Xdv_x = mat(T.d, wx, T.v);
  Eigen::MatrixXd Xvv = mat(T.v, w1, T.v);
  Eigen::MatrixXd YiWvv = mat(T.v, winvW, T.v);
  Eigen::MatrixXd Yvd = mat(T.v, w1, T.d);
  Eigen::MatrixXd YWdd = mat(T.d, wW, T.d);
  Eigen::MatrixXd YWvv = mat(T.v, wW, T.v);

  const double e2 = prob.eps * prob.eps;
  const double alpha = (Yp * Yp * C(0, 0) - 2 * Yp * Xlp * C(0, 1) + Xlp * Xlp * C(1, 1)) / Yp;
  const double beta = (-2 * Yp * Wp * C(0, 1) + 2 * Xlp * Wp * C(1, 1)) / Yp;
  const double gamma = Wp * Wp * C(1, 1) / Yp;
  const double a01 = (Yp * C(0, 1) - Xlp * C(1, 1)) / Yp;
  const double b01 = -Wp * C(1, 1) / Yp;
  const double t11 = C(1, 1) / Yp;

  const int n1 = static_cast<int>(T.v.rows());
  for (int j1 = 0; j1 < n1; ++j1)
    for (int i1 = 0; i1 < n1; ++i1) {
      const int l1 = j1 * n1 + i1;
      for (int j2 = 0; j2 < n1; ++j2)
        for (int i2 = 0; i2 < n1; ++i2) {
          const int l2 = j2 * n1 + i2;
          double stiff =
              (alpha * Xdd(i1, i2) + beta * Xdd_x(i1, i2) + gamma * Xdd_x2(i1, i2)) *
              YiWvv(j1, j2);
          stiff += a01 * (Xdv(i1, i2) * Yvd(j1, j2) + Xdv(i2, i1) * Yvd(j2, j1));
          stiff += b01 * (Xdv_x(i1, i2) * Yvd(j1, j2) + Xdv_x(i2, i1) * Yvd(j2, j1));
          stiff += t11 * Xvv(i1, i2) * YWdd(j1, j2);
          K(l1, l2) += e2 * stiff + cval * Yp * Xvv(i1, i2) * YWvv(j1, j2);
        }
    }
}

void assemble_generic(const Mesh& mesh, int elem, const ProblemData& prob, const Tables1D& T,
                      Eigen::MatrixXd& K) {
  const int q = static_cast<int>(T.w.size());
  const int n1 = static_cast<int>(T.v.rows());
  const int n = n1 * n1;
  const double e2 = prob.eps * prob.eps;
  Eigen::VectorXd phi(n), gx(n), gy(n);
  for (int a = 0; a < q; ++a) {
    for (int b = 0; b < q; ++b) {
      const Vec2 ref(T.x[a], T.x[b]);
      const Mat2 J = mesh.jacobian(elem, ref);
      const double det = J.determinant();
      if (det <= 0.0) throw std::runtime_error("element_matrix: singular Jacobian");
      const Vec2 phys = mesh.map_point(elem, ref);
      const Mat2 Jinv = J.inverse();
      const Mat2 G = det * (Jinv * prob.A(phys) * Jinv.transpose());
      const double cw = det * prob.c(phys);
      const double w = T.w[a] * T.w[b];
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n1; ++i) {
          const int l = j * n1 + i;
          phi[l] = T.v(i, a) * T.v(j, b);
          gx[l] = T.d(i, a) * T.v(j, b);
          gy[l] = T.v(i, a) * T.d(j, b);
        }
      for (int l1 = 0; l1 < n; ++l1) {
        const double g1x = gx[l1], g1y = gy[l1], p1 = phi[l1];
        const double h1x = G(0, 0) * g1x + G(0, 1) * g1y;
        const double h1y = G(1, 0) * g1x + G(1, 1) * g1y;
        for (int l2 = l1; l2 < n; ++l2) {
          const double val =
              w * (e2 * (h1x * gx[l2] + h1y * gy[l2]) + cw * p1 * phi[l2]);
          K(l1, l2) += val;
          if (l2 != l1) K(l2, l1) += val;
        }
      }
    }
  }
}

}  // namespace

LocalMatrices element_matrix(const Mesh& mesh, int elem, int p, const ProblemData& prob,
                             int quad_order) {
  const int q = quad_order > 0 ? quad_order : default_quad_order(p);
  const Tables1D T = make_tables(p, q);
  const int n1 = p + 1;
  const int n = n1 * n1;
  LocalMatrices loc;
  loc.K = Eigen::MatrixXd::Zero(n, n);
  loc.F = Eigen::VectorXd::Zero(n);

  const Element& el = mesh.elements[elem];
  const bool macro_affine = mesh.macro->macros[el.macro].map.is_affine();
  if (prob.constant_coefficients && macro_affine && vertical_sided(el.ref_corners))
    assemble_separable_vertical(mesh, elem, prob, T, loc.K);
  else if (prob.constant_coefficients && macro_affine && horizontal_sided(el.ref_corners))
    assemble_separable_horizontal(mesh, elem, prob, T, loc.K);
  else
    assemble_generic(mesh, elem, prob, T, loc.K);

  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) {
      const Vec2 ref(T.x[a], T.x[b]);
      const double det = mesh.jacobian(elem, ref).determinant();
      const double fw = T.w[a] * T.w[b] * det * prob.f(mesh.map_point(elem, ref));
      if (fw == 0.0) continue;
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n1; ++i) loc.F[j * n1 + i] += fw * T.v(i, a) * T.v(j, b);
    }
  return loc;
}

SparseSystem assemble(const FESpace& space, const ProblemData& prob, int quad_order) {
  const Mesh& mesh = *space.mesh;
  const int q = quad_order > 0 ? quad_order : default_quad_order(space.p);
  SparseSystem sys;
  sys.rhs = Eigen::VectorXd::Zero(space.n_dofs);
  std::vector<Eigen::Triplet<double>> trip;

  for (int e = 0; e < mesh.n_elements(); ++e) {
    LocalMatrices loc = element_matrix(mesh, e, space.p, prob, q);
    const auto& gd = space.dofs[e];
    const auto& sg = space.signs[e];
    const int n = static_cast<int>(gd.size());
    for (int l1 = 0; l1 < n; ++l1) {
      const int g1 = gd[l1];
      if (g1 < 0) continue;
      sys.rhs[g1] += sg[l1] * loc.F[l1];
      for (int l2 = 0; l2 < n; ++l2) {
        const int g2 = gd[l2];
        if (g2 < 0) continue;
        trip.emplace_back(g1, g2, sg[l1] * sg[l2] * loc.K(l1, l2));
      }
    }
  }
  sys.matrix.resize(space.n_dofs, space.n_dofs);
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

SolveResult solve(const SparseSystem& sys, double tol) {
  const Eigen::SparseMatrix<double>& A = sys.matrix;
  const Eigen::VectorXd& b = sys.rhs;
  SolveResult res;
  if (b.size() == 0) return res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x = Eigen::VectorXd::Zero(b.size());
    return res;
  }

  Eigen::VectorXd d = A.diagonal();
  if (d.minCoeff() <= 0.0) throw std::runtime_error("solve: matrix is not SPD (nonpositive diagonal)");
  Eigen::VectorXd scale = d.array().sqrt().inverse();
  Eigen::SparseMatrix<double> As = scale.asDiagonal() * A * scale.asDiagonal();
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(As);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("solve: Cholesky factorization failed (matrix not SPD)");

  Eigen::VectorXd x = scale.asDiagonal() * llt.solve(Eigen::VectorXd(scale.asDiagonal() * b));
  Eigen::VectorXd r = b - A * x;
  res.residual = r.norm() / bnorm;
  while (res.residual > tol && res.refinements < 10) {
    x += scale.asDiagonal() * llt.solve(Eigen::VectorXd(scale.asDiagonal() * r));
    r = b - A * x;
    const double nr = r.norm() / bnorm;
    if (nr >= res.residual) break;  // refinement stalled
    res.residual = nr;
    ++res.refinements;
  }
  res.x = x;
  return res;
}

void export_coo(const SparseSystem& sys, std::ostream& out) {
  out << sys.matrix.rows() << " " << sys.matrix.cols() << " " << sys.matrix.nonZeros() << "\n";
  for (int k = 0; k < sys.matrix.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, k); it; ++it) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", static_cast<int>(it.row()),
                    static_cast<int>(it.col()), it.value());
      out << buf;
    }
}

}  // namespace layerfem
