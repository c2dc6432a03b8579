#include "layerfem/probes.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "layerfem/basis.hpp"

namespace layerfem {

namespace {

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (size_t k = c.size(); k-- > 0;) v = v * x + c[k];
  return v;
}

std::vector<double> derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (size_t k = 1; k < c.size(); ++k) d.push_back(k * c[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

// Random polynomial with i.i.d. uniform [-1,1] coefficients in the hierarchic basis.
struct RandomPoly {
  int p;
  std::vector<double> coeffs;
  double value(double x) const {
    std::vector<double> v(p + 1), d(p + 1);
    shape_eval_1d(p, x, v.data(), d.data());
    double s = 0;
    for (int k = 0; k <= p; ++k) s += coeffs[k] * v[k];
    return s;
  }
  double deriv(double x) const {
    std::vector<double> v(p + 1), d(p + 1);
    shape_eval_1d(p, x, v.data(), d.data());
    double s = 0;
    for (int k = 0; k <= p; ++k) s += coeffs[k] * d[k];
    return s;
  }
};

RandomPoly random_poly(int p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  RandomPoly rp{p, {}};
  rp.coeffs.resize(p + 1);
  for (double& c : rp.coeffs) c = dist(rng);
  return rp;
}

}  // namespace

double markov_ratio(int p, int trials, std::uint64_t seed) {
  if (p < 1) throw std::invalid_argument("markov_ratio: p must be >= 1");
  const int n = std::max(2001, 400 * p);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(t));
    RandomPoly f = random_poly(p, rng);
    double supf = 0.0, supd = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = static_cast<double>(i) / n;
      supf = std::max(supf, std::abs(f.value(x)));
      supd = std::max(supd, std::abs(f.deriv(x)));
    }
    if (supf == 0.0) continue;
    worst = std::max(worst, supd / (2.0 * p * p * supf));
  }
  return worst;
}

double chebyshev_markov_ratio(int p) {
  const int n = std::max(2001, 400 * p);
  double supf = 0.0, supd = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    const double xi = 2.0 * x - 1.0;
    double t0 = 1.0, t1 = xi, u0 = 1.0, u1 = 2.0 * xi;
    for (int k = 2; k <= p; ++k) {
      const double t2 = 2.0 * xi * t1 - t0;
      t0 = t1;
      t1 = t2;
      const double u2 = 2.0 * xi * u1 - u0;
      u0 = u1;
      u1 = u2;
    }
    const double val = (p == 0) ? 1.0 : (p == 1 ? xi : t1);
    const double der = (p == 0) ? 0.0 : (p == 1 ? 1.0 : p * u0);  // T_p' = p U_{p-1}
    supf = std::max(supf, std::abs(val));
    supd = std::max(supd, 2.0 * std::abs(der));  // chain rule to (0,1)
  }
  return supd / (2.0 * p * p * supf);
}

EdgeLift make_edge_lift(const std::vector<double>& coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("make_edge_lift: empty polynomial");
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  scale = std::max(scale, 1.0);
  if (std::abs(horner(coeffs, 0.0)) > 1e-12 * scale ||
      std::abs(horner(coeffs, 1.0)) > 1e-12 * scale)
    throw std::invalid_argument("make_edge_lift: f must vanish at both endpoints");

  // Synthetic division: f(x) = (1-x) q(x) when f(1) = 0.
  EdgeLift lift;
  lift.f = coeffs;
  const int n = static_cast<int>(coeffs.size()) - 1;
  std::vector<double> q(std::max(n, 1), 0.0);
  double carry = 0.0;
  for (int k = n; k >= 1; --k) {
    q[k - 1] = -(coeffs[k] + carry);
    carry = -q[k - 1];
  }
  lift.q = q;
  return lift;
}

double EdgeLift::edge_value(double x) const { return horner(f, x); }

double EdgeLift::value(double x, double y) const { return horner(q, x) * (1.0 - x - y); }

Vec2 EdgeLift::gradient(double x, double y) const {
  const double qv = horner(q, x);
  const double qd = horner(derivative(q), x);
  return Vec2(qd * (1.0 - x - y) - qv, -qv);
}

Eigen::MatrixXd lift_edge_triangle(const std::vector<double>& coeffs, int grid_n) {
  EdgeLift lift = make_edge_lift(coeffs);
  Eigen::MatrixXd vals = Eigen::MatrixXd::Constant(grid_n + 1, grid_n + 1,
                                                   std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j <= grid_n; ++j)
    for (int i = 0; i + j <= grid_n; ++i)
      vals(j, i) = lift.value(static_cast<double>(i) / grid_n, static_cast<double>(j) / grid_n);
  return vals;
}

LiftBounds lift_bounds(const EdgeLift& lift, int grid_n) {
  LiftBounds b;
  for (int i = 0; i <= grid_n; ++i)
    b.sup_edge = std::max(b.sup_edge, std::abs(lift.edge_value(static_cast<double>(i) / grid_n)));
  for (int j = 0; j <= grid_n; ++j)
    for (int i = 0; i + j <= grid_n; ++i) {
      const double x = static_cast<double>(i) / grid_n, y = static_cast<double>(j) / grid_n;
      b.sup_lift = std::max(b.sup_lift, std::abs(lift.value(x, y)));
      b.sup_grad = std::max(b.sup_grad, lift.gradient(x, y).cwiseAbs().maxCoeff());
    }
  return b;
}

double inverse_estimate_ratio_single(int p, const Eigen::MatrixXd& coeffs, double hx,
                                     double hy, bool* degenerate) {
  const int n1 = p + 1;
  if (coeffs.rows() != n1 || coeffs.cols() != n1)
    throw std::invalid_argument("inverse_estimate_ratio_single: coefficient shape mismatch");

  const int m = 32 + 8 * p;
  std::vector<double> vx(n1), dx(n1), vy(n1), dy(n1);
  double sup = 0.0, sup0 = 0.0;
  for (int a = 0; a <= m; ++a) {
    shape_eval_1d(p, static_cast<double>(a) / m, vx.data(), dx.data());
    for (int b = 0; b <= m; ++b) {
      shape_eval_1d(p, static_cast<double>(b) / m, vy.data(), dy.data());
      double v = 0.0;
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n1; ++i) v += coeffs(i, j) * vx[i] * vy[j];
      sup = std::max(sup, std::abs(v));
      if (b == 0) sup0 = std::max(sup0, std::abs(v));
    }
  }

  QuadratureRule rule = gauss_rule(p + 1);
  double dy_l2 = 0.0;
  for (int a = 0; a < rule.size(); ++a) {
    shape_eval_1d(p, rule.nodes[a], vx.data(), dx.data());
    for (int b = 0; b < rule.size(); ++b) {
      shape_eval_1d(p, rule.nodes[b], vy.data(), dy.data());
      double g = 0.0;
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n1; ++i) g += coeffs(i, j) * vx[i] * dy[j];
      dy_l2 += rule.weights[a] * rule.weights[b] * g * g;
    }
  }
  // d_y pi scales by 1/hy; the cell integral carries hx*hy.
  dy_l2 = std::sqrt(dy_l2 * hx / hy);

  const double numer = std::max(sup - sup0, 0.0);
  if (dy_l2 <= 1e-13 * std::max(sup, 1.0)) {
    if (degenerate) *degenerate = true;
    if (numer > 1e-10 * std::max(sup, 1.0))
      throw std::runtime_error("inverse_estimate: constant-in-y polynomial with nonzero excess");
    return 0.0;
  }
  if (degenerate) *degenerate = false;
  return numer / (p * std::sqrt(hy / hx) * dy_l2);
}

InverseEstimateResult inverse_estimate_ratio(int p, double hx, double hy, int trials,
                                             std::uint64_t seed) {
  if (!(hx > 0 && hx <= 1 && hy > 0 && hy <= 1))
    throw std::invalid_argument("inverse_estimate_ratio: h_x, h_y must be in (0,1]");
  InverseEstimateResult res;
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(t));
    Eigen::MatrixXd c(p + 1, p + 1);
    for (int j = 0; j <= p; ++j)
      for (int i = 0; i <= p; ++i) c(i, j) = dist(rng);
    bool degenerate = false;
    const double r = inverse_estimate_ratio_single(p, c, hx, hy, &degenerate);
    if (degenerate)
      ++res.degenerate_count;
    else
      res.max_ratio = std::max(res.max_ratio, r);
  }
  return res;
}

Lemma21Result lemma21_ratio(const ProblemData& problem, int p, double lambda, double sigma,
                            int p_max, int quad_boost) {
  auto macro = std::make_shared<const MacroTriangulation>(build_lshape_macro());
  MeshParams params;
  params.lambda = lambda;
  params.sigma = sigma;
  params.kappa = compute_kappa(lambda, p, problem.eps);
  params.p = p;
  params.levels.assign(macro->macros.size(), p + 1);
  auto mesh = std::make_shared<const Mesh>(
      generate_mesh(macro, lshape_default_assignment(), params));
  FESpace space = build_space(mesh, p);
  SparseSystem sys = assemble(space, problem, default_quad_order(p, quad_boost));
  Eigen::VectorXd uN = solve(sys).x;

  ReferenceSolution ref = build_reference(*mesh, problem, p_max, quad_boost);

  // Large study cells coincide with their fine counterparts.
  std::vector<int> fine_of_coarse(mesh->n_elements(), -1);
  for (int ef = 0; ef < ref.mesh->n_elements(); ++ef) {
    const int ec = ref.owner[ef];
    if (mesh->elements[ec].tag == RegionTag::large) fine_of_coarse[ec] = ef;
  }

  FieldEvaluator uref_eval = [&](int elem, const Vec2& r, const Vec2&) {
    const int ef = fine_of_coarse[elem];
    return evaluate(ref.space, ref.coeffs, ef, r).value;
  };
  ProjectionResult proj = weighted_l2_projection(space, problem.c, uref_eval,
                                                 default_quad_order(p, quad_boost));
  Eigen::VectorXd iu = proj.as_full(space.n_dofs);

  const int q = ref.p_ref + 2;
  QuadratureRule rule = gauss_rule(q);
  double h1_all = 0.0, h1_rhs = 0.0, l2_off = 0.0;
  for (int ef = 0; ef < ref.mesh->n_elements(); ++ef) {
    const int ec = ref.owner[ef];
    const bool on_omega0 = mesh->elements[ec].tag == RegionTag::large;
    const auto& fc = ref.mesh->elements[ef].ref_corners;
    const auto& cc = mesh->elements[ec].ref_corners;
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        const Vec2 rf(rule.nodes[a], rule.nodes[b]);
        const double w =
            rule.weights[a] * rule.weights[b] * ref.mesh->jacobian(ef, rf).determinant();
        const Vec2 rc = quad_inverse(cc, quad_map(fc, rf));
        EvalResult vref = evaluate(ref.space, ref.coeffs, ef, rf);
        EvalResult vN = evaluate(space, uN, ec, rc);
        h1_all += w * (vN.gradient - vref.gradient).squaredNorm();
        if (on_omega0) {
          EvalResult vI = evaluate(space, iu, ec, rc);
          h1_rhs += w * (vI.gradient - vref.gradient).squaredNorm();
        } else {
          h1_rhs += w * (vN.gradient - vref.gradient).squaredNorm();
          const double d = vN.value - vref.value;
          l2_off += w * d * d;
        }
      }
  }

  Lemma21Result res;
  const double se = std::sqrt(problem.eps);
  res.lhs = se * std::sqrt(h1_all);
  res.rhs = se * std::sqrt(h1_rhs) + std::sqrt(l2_off) / se;
  res.orthogonality_residual = proj.residual;
  if (res.rhs < 1e-14) {
    res.degenerate = true;
    res.ratio = 0.0;
  } else {
    res.ratio = res.lhs / res.rhs;
  }
  return res;
}

std::vector<ProbeResult> run_all_probes(std::uint64_t seed) {
  std::vector<ProbeResult> out;
  for (int p = 1; p <= 8; ++p) {
    ProbeResult r;
    r.name = "markov";
    r.sweep = "p=" + std::to_string(p) + " trials=200 seed=" + std::to_string(seed);
    r.observed_max_ratio = markov_ratio(p, 200, seed + 7919 * p);
    r.bound_form = "sup|f'| <= 2 p^2 sup|f| on (0,1)";
    out.push_back(r);
  }
  {
    ProbeResult r;
    r.name = "markov_chebyshev";
    r.sweep = "p=4 extremal input";
    r.observed_max_ratio = chebyshev_markov_ratio(4);
    r.bound_form = "equality case of the 2 p^2 bound";
    out.push_back(r);
  }
  {
    std::mt19937_64 rng(seed + 101);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    double sup_ratio = 0.0, grad_ratio = 0.0;
    const int deg = 6;
    for (int t = 0; t < 100; ++t) {
      // Random bubble combination vanishing at both endpoints, in monomials.
      std::vector<double> mono(deg + 1, 0.0);
      for (int k = 2; k <= deg; ++k) {
        const double c = dist(rng);
        // phi_k in monomials via sampled interpolation is overkill; use
        // x^a (1-x) building blocks which also vanish at the endpoints.
        mono[k] += c;        // + c x^k
        mono[k - 1] += -c;   // - c x^{k-1}  => c x^{k-1}(x - 1)
      }
      EdgeLift lift = make_edge_lift(mono);
      LiftBounds b = lift_bounds(lift, 400);
      if (b.sup_edge == 0.0) continue;
      sup_ratio = std::max(sup_ratio, b.sup_lift / b.sup_edge);
      grad_ratio = std::max(grad_ratio, b.sup_grad / (deg * deg * b.sup_edge));
    }
    ProbeResult r1;
    r1.name = "lift_sup";
    r1.sweep = "degree=6 trials=100 seed=" + std::to_string(seed);
    r1.observed_max_ratio = sup_ratio;
    r1.bound_form = "sup|Lf| <= sup|f|";
    out.push_back(r1);
    ProbeResult r2;
    r2.name = "lift_grad";
    r2.sweep = "degree=6 trials=100 seed=" + std::to_string(seed);
    r2.observed_max_ratio = grad_ratio;
    r2.bound_form = "sup|grad Lf| <= C p^2 sup|f|, C <= 2";
    out.push_back(r2);
  }
  for (int p = 1; p <= 8; ++p) {
    const double hs[3] = {1.0, 1e-2, 1e-4};
    double worst = 0.0;
    for (double hx : hs)
      for (double hy : hs)
        worst = std::max(worst,
                         inverse_estimate_ratio(p, hx, hy, 100, seed + 31 * p).max_ratio);
    ProbeResult r;
    r.name = "inverse_estimate";
    r.sweep = "p=" + std::to_string(p) + " h in {1,1e-2,1e-4}^2 trials=100";
    r.observed_max_ratio = worst;
    r.bound_form = "(sup|pi| - sup|pi(.,0)|)_+ <= C p sqrt(hy/hx) ||dy pi||_L2, C <= 5";
    out.push_back(r);
  }
  for (int p = 1; p <= 4; ++p) {
    for (double eps : {1e-2, 1e-4, 1e-6}) {
      ProblemData prob;
      prob.eps = eps;
      prob.f = [](const Vec2&) { return 1.0; };
      Lemma21Result res = lemma21_ratio(prob, p, 1.0, 0.5, 4);
      ProbeResult r;
      r.name = "lemma21";
      char buf[64];
      std::snprintf(buf, sizeof(buf), "p=%d eps=%.0e", p, eps);
      r.sweep = buf;
      r.observed_max_ratio = res.degenerate ? 0.0 : res.ratio;
      r.bound_form = "sqrt(eps)|u-u_N|_H1 <= C [sqrt(eps)|u-Iu|_H1 + ||u-Iu||_L2(off)/sqrt(eps)], C <= 10";
      out.push_back(r);
    }
  }
  return out;
}

std::string probes_to_csv(const std::vector<ProbeResult>& results) {
  std::ostringstream os;
  os << "name,sweep,observed_max_ratio,bound_form\n";
  for (const ProbeResult& r : results) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6e", r.observed_max_ratio);
    os << r.name << "," << r.sweep << "," << buf << ",\"" << r.bound_form << "\"\n";
  }
  return os.str();
}

}  // namespace layerfem
