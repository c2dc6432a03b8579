#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layerfem/analysis.hpp"

namespace layerfem {

enum class ExampleKind { constant, peak, zero };

const char* to_string(ExampleKind k);
ExampleKind example_from_string(const std::string& s);

/// -eps^2 Laplace u + u = f on the L-shape, f per example.
ProblemData make_example(ExampleKind kind, double eps);

struct StudyConfig {
  ExampleKind example = ExampleKind::constant;
  std::vector<double> eps_list = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
  int p_max = 7;
  double lambda = 1.0;
  double sigma = 0.5;
  int quad_boost = -1;  // -1: automatic (0 for polynomial data, 4 for the peak load)
  std::string format = "csv";  // or "markdown"
  std::string out_dir;
  bool with_reference = true;
  std::uint64_t seed = 0;
  int extra_layers = 1;  // geometric levels L = p + extra_layers

  void apply_quick_preset();  // p_max = 5, eps in {1e-2, 1e-4, 1e-6}
  int effective_quad_boost() const;
};

struct CellDiagnostics {
  int p = 0;
  double eps = 1.0;
  int n_dofs = 0;
  bool solved = false;
  double residual = 0.0;
  double energy_identity_rel = 0.0;  // |x'Kx - b'x| / |b'x|
  std::string error;
};

struct StudyResult {
  StudyConfig config;
  std::vector<ErrorReport> reports;
  std::vector<CellDiagnostics> diagnostics;
};

StudyResult run_study(const StudyConfig& config);

/// Table with p rows and eps columns (input order), 3 significant digits.
std::string emit_table(const std::vector<ErrorReport>& reports,
                       const std::vector<double>& eps_order, const std::string& metric,
                       const std::string& format);

std::string reports_to_csv(const StudyResult& result, bool include_seconds = true);

/// Writes report.csv plus one table per metric into config.out_dir.
void write_study_outputs(const StudyResult& result);

}  // namespace layerfem
