#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layerfem/analysis.hpp"

namespace layerfem {

struct ProbeResult {
  std::string name;
  std::string sweep;
  double observed_max_ratio = 0.0;
  std::string bound_form;
};

/// max over random degree-p polynomials of ||f'||_inf / (2 p^2 ||f||_inf) on (0,1).
double markov_ratio(int p, int trials, std::uint64_t seed);
/// Same ratio for the degree-p Chebyshev polynomial mapped to (0,1); equals 1.
double chebyshev_markov_ratio(int p);

/// Edge-to-triangle lifting g(x,y) = f(x) (1-x-y)/(1-x) for a polynomial f
/// with f(0) = f(1) = 0, evaluated through the division q = f/(1-x).
struct EdgeLift {
  std::vector<double> f;  // monomial coefficients
  std::vector<double> q;  // monomial coefficients of f(x)/(1-x)
  double edge_value(double x) const;
  double value(double x, double y) const;
  Vec2 gradient(double x, double y) const;
};

EdgeLift make_edge_lift(const std::vector<double>& monomial_coeffs);

/// Lifted values on a uniform barycentric-style grid over the reference
/// triangle (row y, column x with x + y <= 1).
Eigen::MatrixXd lift_edge_triangle(const std::vector<double>& monomial_coeffs, int grid_n);

struct LiftBounds {
  double sup_edge = 0.0;
  double sup_lift = 0.0;
  double sup_grad = 0.0;
};
LiftBounds lift_bounds(const EdgeLift& lift, int grid_n);

struct InverseEstimateResult {
  double max_ratio = 0.0;
  int degenerate_count = 0;
};

/// max over random pi in Q_p on (0,h_x)x(0,h_y) of
/// (||pi||_inf - ||pi(.,0)||_inf)_+ / (p sqrt(h_y/h_x) ||d_y pi||_L2).
InverseEstimateResult inverse_estimate_ratio(int p, double hx, double hy, int trials,
                                             std::uint64_t seed);
double inverse_estimate_ratio_single(int p, const Eigen::MatrixXd& coeffs, double hx,
                                     double hy, bool* degenerate = nullptr);

struct Lemma21Result {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool degenerate = false;
  double orthogonality_residual = 0.0;
};

/// Compares sqrt(eps)||grad(u_ref - u_N)|| against the projection-based bound
/// with Iu = weighted L2 projection on the large-element region, u_N elsewhere.
Lemma21Result lemma21_ratio(const ProblemData& problem, int p, double lambda, double sigma,
                            int p_max, int quad_boost = 0);

std::vector<ProbeResult> run_all_probes(std::uint64_t seed);
std::string probes_to_csv(const std::vector<ProbeResult>& results);

}  // namespace layerfem
