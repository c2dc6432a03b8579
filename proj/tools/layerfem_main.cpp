#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "layerfem/probes.hpp"
#include "layerfem/study.hpp"

using namespace layerfem;

int main(int argc, char** argv) {
  CLI::App app{"hp finite element solver for reaction-diffusion problems with boundary layers"};
  app.require_subcommand(1);

  // study
  auto* study = app.add_subcommand("study", "run a (p, eps) convergence study on the L-shape");
  std::string example = "constant";
  std::vector<double> eps_list;
  StudyConfig cfg;
  bool quick = false;
  bool no_reference = false;
  study->add_option("--example", example, "constant|peak")->capture_default_str();
  study->add_option("--eps", eps_list, "list of eps values")->delimiter(',');
  study->add_option("--pmax", cfg.p_max, "maximal polynomial degree")->capture_default_str();
  study->add_option("--lambda", cfg.lambda, "layer width multiplier")->capture_default_str();
  study->add_option("--sigma", cfg.sigma, "geometric grading factor")->capture_default_str();
  study->add_option("--format", cfg.format, "csv|markdown")->capture_default_str();
  study->add_option("--out", cfg.out_dir, "output directory");
  study->add_option("--quad-boost", cfg.quad_boost, "extra quadrature points per direction");
  study->add_option("--seed", cfg.seed, "seed recorded in outputs");
  study->add_flag("--quick", quick, "p_max=5, eps in {1e-2,1e-4,1e-6}");
  study->add_flag("--no-reference", no_reference, "skip reference solves and error norms");

  // mesh
  auto* meshcmd = app.add_subcommand("mesh", "generate and inspect the study mesh");
  bool dump = false;
  int mesh_p = 1;
  double mesh_eps = 1e-2;
  double mesh_lambda = 1.0, mesh_sigma = 0.5;
  int mesh_levels = -1;
  std::string mesh_out;
  meshcmd->add_flag("--dump", dump, "print the mesh as JSON");
  meshcmd->add_option("--p", mesh_p, "degree used to derive kappa")->capture_default_str();
  meshcmd->add_option("--eps", mesh_eps, "perturbation parameter")->capture_default_str();
  meshcmd->add_option("--lambda", mesh_lambda)->capture_default_str();
  meshcmd->add_option("--sigma", mesh_sigma)->capture_default_str();
  meshcmd->add_option("--levels", mesh_levels, "geometric levels (default p+1)");
  meshcmd->add_option("--out", mesh_out, "write JSON to file instead of stdout");

  // probes
  auto* probes = app.add_subcommand("probes", "numerical checks of the polynomial inequalities");
  bool all = false;
  std::uint64_t probe_seed = 20240901;
  std::string probes_out;
  probes->add_flag("--all", all, "run the full probe sweep");
  probes->add_option("--seed", probe_seed, "random seed")->capture_default_str();
  probes->add_option("--out", probes_out, "write CSV to file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*study) {
      cfg.example = example_from_string(example);
      if (!eps_list.empty()) cfg.eps_list = eps_list;
      if (quick) cfg.apply_quick_preset();
      cfg.with_reference = !no_reference;
      StudyResult result = run_study(cfg);
      write_study_outputs(result);
      std::cout << emit_table(result.reports, result.config.eps_list, "l2_error", cfg.format)
                << "\n"
                << emit_table(result.reports, result.config.eps_list, "balanced_h1semi_error",
                              cfg.format);
      for (const CellDiagnostics& d : result.diagnostics)
        if (!d.solved)
          std::cerr << "cell p=" << d.p << " eps=" << d.eps << " failed: " << d.error << "\n";
    } else if (*meshcmd) {
      auto macro = std::make_shared<const MacroTriangulation>(build_lshape_macro());
      MeshParams params;
      params.lambda = mesh_lambda;
      params.sigma = mesh_sigma;
      params.kappa = compute_kappa(mesh_lambda, mesh_p, mesh_eps);
      params.p = mesh_p;
      params.levels.assign(macro->macros.size(),
                           mesh_levels >= 0 ? mesh_levels : mesh_p + 1);
      Mesh mesh = generate_mesh(macro, lshape_default_assignment(), params);
      if (dump) {
        const std::string text = mesh_to_json(mesh).dump(2);
        if (mesh_out.empty()) {
          std::cout << text << "\n";
        } else {
          std::ofstream out(mesh_out);
          out << text << "\n";
        }
      } else {
        ConformityReport rep = check_conformity(mesh);
        std::cout << "elements: " << mesh.n_elements() << ", conforming: "
                  << (rep.pass ? "yes" : "no")
                  << ", dist(Omega0, boundary): " << rep.omega0_boundary_dist << "\n";
      }
    } else if (*probes) {
      (void)all;
      const std::string csv = probes_to_csv(run_all_probes(probe_seed));
      if (probes_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream out(probes_out);
        out << csv;
      }
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
