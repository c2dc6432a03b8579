#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "layerfem/geometry.hpp"

namespace layerfem {

enum class PatternKind { trivial, boundary_layer, tensor_product, mixed, geometric };
enum class RegionTag { large, aniso, corner_layer };

const char* to_string(PatternKind k);
const char* to_string(RegionTag t);

/// One cell of a refinement pattern, as a convex quadrilateral in patch
/// reference coordinates. Corners are the images of (0,0),(1,0),(1,1),(0,1),
/// counterclockwise.
struct PatternCell {
  std::array<Vec2, 4> v;
  RegionTag tag;
};

struct PatternMesh {
  PatternKind kind = PatternKind::trivial;
  bool mirrored = false;
  double kappa = 0.5;
  double sigma = 0.5;
  int levels = 0;
  std::vector<PatternCell> cells;
};

/// kappa = min(lambda * p * eps, 1/2).
double compute_kappa(double lambda, int p, double eps);

/// Builds a reference refinement pattern. The graded kinds (tensor_product,
/// mixed, geometric) share one layout: trapezoid rings grading toward (0,0)
/// inside (0,kappa)^2, an anisotropic strip along the bottom, an anisotropic
/// collar along the left, and one large cell. `mirrored` reflects the pattern
/// in x so the grading sits at (1,0); it is meaningful for mixed patches only.
PatternMesh build_pattern(PatternKind kind, double kappa, double sigma, int levels,
                          bool mirrored = false);

struct MeshParams {
  double lambda = 1.0;
  double sigma = 0.5;
  double kappa = 0.5;
  int p = 1;                // degree used to derive kappa
  std::vector<int> levels;  // geometric refinement depth per macro element
};

struct PatternAssignment {
  PatternKind kind = PatternKind::trivial;
  bool mirrored = false;
};

struct Element {
  int macro = 0;
  int cell = 0;  // index within the macro's pattern
  std::array<Vec2, 4> ref_corners;
  RegionTag tag = RegionTag::large;
};

// Bilinear map of the unit square onto a convex quad (affine for rectangles).
Vec2 quad_map(const std::array<Vec2, 4>& c, const Vec2& ref);
Mat2 quad_jacobian(const std::array<Vec2, 4>& c, const Vec2& ref);
Vec2 quad_inverse(const std::array<Vec2, 4>& c, const Vec2& p);

struct MeshEdge {
  int a = -1, b = -1;  // global vertex ids, a < b
  std::array<int, 2> elem = {-1, -1};
  std::array<int, 2> side = {-1, -1};
  bool boundary = false;
};

/// Global conforming mesh: pattern cells transplanted by the macro maps.
/// Immutable after generation.
struct Mesh {
  std::shared_ptr<const MacroTriangulation> macro;
  MeshParams params;
  std::vector<PatternMesh> patches;
  std::vector<Element> elements;

  std::vector<std::array<int, 4>> elem_vertex;
  std::vector<Vec2> vertex_pos;
  std::vector<char> vertex_on_boundary;
  std::vector<MeshEdge> edges;
  std::vector<std::array<int, 4>> elem_edges;
  // Local side params run +x (bottom, top) and +y (left, right); forward means
  // that direction agrees with the edge's canonical a->b direction.
  std::vector<std::array<char, 4>> elem_edge_forward;
  std::vector<std::array<char, 4>> elem_side_boundary;

  int n_elements() const { return static_cast<int>(elements.size()); }
  Vec2 cell_point(int e, const Vec2& ref) const;  // patch reference coords
  Vec2 map_point(int e, const Vec2& ref) const;   // physical coords
  Mat2 jacobian(int e, const Vec2& ref) const;
  double element_area(int e, int quad_points = 4) const;
  double total_area(int quad_points = 4) const;
};

struct ConformityReport {
  bool pass = true;
  std::vector<std::string> violations;
  double omega0_boundary_dist = -1.0;  // -1 when there are no large elements
};

Mesh generate_mesh(std::shared_ptr<const MacroTriangulation> macro,
                   const std::vector<PatternAssignment>& assignment,
                   const MeshParams& params, bool validate = true);

/// Stitches pre-built patterns (one per macro element) into a global mesh.
/// With validate on, hanging nodes are rejected; the pattern-to-macro rules
/// are only checked by generate_mesh.
Mesh assemble_from_patterns(std::shared_ptr<const MacroTriangulation> macro,
                            std::vector<PatternMesh> patches, const MeshParams& params,
                            bool validate = true);

ConformityReport check_conformity(const Mesh& mesh);

/// Pattern assignment reproducing the layer-and-corner refinement study on
/// the L-shape macro layout of build_lshape_macro().
std::vector<PatternAssignment> lshape_default_assignment();

nlohmann::json mesh_to_json(const Mesh& mesh);

}  // namespace layerfem
