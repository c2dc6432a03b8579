#include "layerfem/study.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace layerfem {

const char* to_string(ExampleKind k) {
  switch (k) {
    case ExampleKind::constant: return "constant";
    case ExampleKind::peak: return "peak";
    case ExampleKind::zero: return "zero";
  }
  return "?";
}

ExampleKind example_from_string(const std::string& s) {
  if (s == "constant") return ExampleKind::constant;
  if (s == "peak") return ExampleKind::peak;
  if (s == "zero") return ExampleKind::zero;
  throw std::invalid_argument("unknown example: " + s);
}

ProblemData make_example(ExampleKind kind, double eps) {
  ProblemData prob;
  prob.eps = eps;
  switch (kind) {
    case ExampleKind::constant:
      prob.f = [](const Vec2&) { return 1.0; };
      break;
    case ExampleKind::peak:
      prob.f = [](const Vec2& x) { return 1.0 / (x.squaredNorm() + 0.15); };
      break;
    case ExampleKind::zero:
      prob.f = [](const Vec2&) { return 0.0; };
      break;
  }
  return prob;
}

void StudyConfig::apply_quick_preset() {
  p_max = 5;
  eps_list = {1e-2, 1e-4, 1e-6};
}

int StudyConfig::effective_quad_boost() const {
  if (quad_boost >= 0) return quad_boost;
  return example == ExampleKind::peak ? 4 : 0;
}

namespace {

std::string format_eps(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.0e", eps);
  return buf;
}

std::string cache_key(const StudyConfig& cfg, double eps, int p) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "ref_%s_%.6e_p%d_pmax%d_lam%.6g_sig%.6g_qb%d_xl%d.bin",
                to_string(cfg.example), eps, p, cfg.p_max, cfg.lambda, cfg.sigma,
                cfg.effective_quad_boost(), cfg.extra_layers);
  return buf;
}

bool load_cached_coeffs(const std::string& path, Eigen::VectorXd& coeffs, double& residual) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::int64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n <= 0 || n > (1 << 28)) return false;
  coeffs.resize(n);
  in.read(reinterpret_cast<char*>(coeffs.data()), n * sizeof(double));
  in.read(reinterpret_cast<char*>(&residual), sizeof(double));
  return static_cast<bool>(in);
}

void save_cached_coeffs(const std::string& path, const Eigen::VectorXd& coeffs,
                        double residual) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return;
  const std::int64_t n = coeffs.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(coeffs.data()), n * sizeof(double));
  out.write(reinterpret_cast<const char*>(&residual), sizeof(double));
}

}  // namespace

StudyResult run_study(const StudyConfig& config) {
  StudyResult result;
  result.config = config;
  auto macro = std::make_shared<const MacroTriangulation>(build_lshape_macro());
  const auto assignment = lshape_default_assignment();
  const int boost = config.effective_quad_boost();

  std::string cache_dir;
  if (!config.out_dir.empty() && config.with_reference) {
    cache_dir = config.out_dir + "/cache";
    std::filesystem::create_directories(cache_dir);
  }

  for (double eps : config.eps_list) {
    ProblemData problem = make_example(config.example, eps);
    problem.validate();
    for (int p = 1; p <= config.p_max; ++p) {
      CellDiagnostics diag;
      diag.p = p;
      diag.eps = eps;
      ErrorReport report;
      report.p = p;
      report.eps = eps;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        MeshParams params;
        params.lambda = config.lambda;
        params.sigma = config.sigma;
        params.kappa = compute_kappa(config.lambda, p, eps);
        params.p = p;
        params.levels.assign(macro->macros.size(), p + config.extra_layers);
        auto mesh = std::make_shared<const Mesh>(generate_mesh(macro, assignment, params));
        FESpace space = build_space(mesh, p);
        SparseSystem sys = assemble(space, problem, default_quad_order(p, boost));
        SolveResult sol = solve(sys);
        diag.solved = true;
        diag.residual = sol.residual;
        diag.n_dofs = space.n_dofs;
        const double axx = sol.x.dot(sys.matrix * sol.x);
        const double bx = sys.rhs.dot(sol.x);
        diag.energy_identity_rel =
            std::abs(axx - bx) / std::max(std::abs(bx), 1e-300);
        report.n_dofs = space.n_dofs;

        if (config.with_reference) {
          ReferenceSolution ref;
          const std::string path =
              cache_dir.empty() ? std::string() : cache_dir + "/" + cache_key(config, eps, p);
          Eigen::VectorXd cached;
          double cached_res = 0.0;
          if (!path.empty() && load_cached_coeffs(path, cached, cached_res)) {
            auto [fine, owner] = build_reference_mesh(*mesh);
            ref.mesh = std::make_shared<Mesh>(std::move(fine));
            ref.owner = std::move(owner);
            ref.p_ref = 2 * config.p_max;
            ref.space = build_space(ref.mesh, ref.p_ref);
            if (cached.size() == ref.space.n_dofs) {
              ref.coeffs = cached;
              ref.solve_residual = cached_res;
            } else {
              ref = build_reference(*mesh, problem, config.p_max, boost);
            }
          } else {
            ref = build_reference(*mesh, problem, config.p_max, boost);
            if (!path.empty()) save_cached_coeffs(path, ref.coeffs, ref.solve_residual);
          }
          ErrorReport err = error_norms(space, sol.x, ref, problem);
          err.wall_time = report.wall_time;
          report = err;
        }
      } catch (const std::exception& ex) {
        diag.solved = false;
        diag.error = ex.what();
        report.l2_error = report.balanced_seminorm_error = report.energy_error =
            report.linf_error = std::nan("");
      }
      report.wall_time =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      result.reports.push_back(report);
      result.diagnostics.push_back(diag);
    }
  }
  return result;
}

namespace {

double metric_value(const ErrorReport& r, const std::string& metric) {
  if (metric == "l2_error") return r.l2_error;
  if (metric == "balanced_h1semi_error") return r.balanced_seminorm_error;
  if (metric == "energy_error") return r.energy_error;
  if (metric == "linf_error") return r.linf_error;
  throw std::invalid_argument("unknown metric: " + metric);
}

std::string format_value(double v) {
  if (std::isnan(v)) return "--";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

}  // namespace

std::string emit_table(const std::vector<ErrorReport>& reports,
                       const std::vector<double>& eps_order, const std::string& metric,
                       const std::string& format) {
  std::vector<int> ps;
  for (const ErrorReport& r : reports)
    if (std::find(ps.begin(), ps.end(), r.p) == ps.end()) ps.push_back(r.p);
  std::sort(ps.begin(), ps.end());

  std::map<std::pair<int, int>, double> grid;  // (p, eps index) -> value
  for (const ErrorReport& r : reports) {
    for (size_t c = 0; c < eps_order.size(); ++c)
      if (r.eps == eps_order[c]) grid[{r.p, static_cast<int>(c)}] = metric_value(r, metric);
  }

  std::ostringstream os;
  const bool md = format == "markdown";
  if (md) {
    os << "| p/eps |";
    for (double eps : eps_order) os << " " << format_eps(eps) << " |";
    os << "\n|---|";
    for (size_t c = 0; c < eps_order.size(); ++c) os << "---|";
    os << "\n";
    for (int p : ps) {
      os << "| " << p << " |";
      for (size_t c = 0; c < eps_order.size(); ++c) {
        auto it = grid.find({p, static_cast<int>(c)});
        os << " " << (it == grid.end() ? "--" : format_value(it->second)) << " |";
      }
      os << "\n";
    }
  } else {
    os << "p/eps";
    for (double eps : eps_order) os << "," << format_eps(eps);
    os << "\n";
    for (int p : ps) {
      os << p;
      for (size_t c = 0; c < eps_order.size(); ++c) {
        auto it = grid.find({p, static_cast<int>(c)});
        os << "," << (it == grid.end() ? "--" : format_value(it->second));
      }
      os << "\n";
    }
  }
  return os.str();
}

std::string reports_to_csv(const StudyResult& result, bool include_seconds) {
  std::ostringstream os;
  os << "example,p,eps,n_dofs,l2_error,balanced_h1semi_error,energy_error,linf_error";
  if (include_seconds) os << ",seconds";
  os << "\n";
  for (const ErrorReport& r : result.reports) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%d,%s,%d,%.12e,%.12e,%.12e,%.12e",
                  to_string(result.config.example), r.p, format_eps(r.eps).c_str(), r.n_dofs,
                  r.l2_error, r.balanced_seminorm_error, r.energy_error, r.linf_error);
    os << buf;
    if (include_seconds) {
      std::snprintf(buf, sizeof(buf), ",%.3f", r.wall_time);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

void write_study_outputs(const StudyResult& result) {
  if (result.config.out_dir.empty()) return;
  std::filesystem::create_directories(result.config.out_dir);
  const std::string ext = result.config.format == "markdown" ? "md" : "csv";
  {
    std::ofstream out(result.config.out_dir + "/report.csv");
    out << reports_to_csv(result);
  }
  for (const char* metric :
       {"l2_error", "balanced_h1semi_error", "energy_error", "linf_error"}) {
    std::ofstream out(result.config.out_dir + "/table_" + metric + "." + ext);
    out << emit_table(result.reports, result.config.eps_list, metric, result.config.format);
  }
}

}  // namespace layerfem
