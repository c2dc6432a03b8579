#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace layerfem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Map from the reference square (0,1)^2 onto a physical quadrilateral.
/// Affine maps keep a constant Jacobian; bilinear maps interpolate the four
/// corner images (0,0),(1,0),(1,1),(0,1).
class PatchMap {
public:
  enum class Kind { affine, bilinear };

  static PatchMap affine(const Vec2& origin, const Vec2& e1, const Vec2& e2);
  static PatchMap bilinear(const std::array<Vec2, 4>& corners);

  Vec2 map(const Vec2& ref) const;
  Mat2 jacobian(const Vec2& ref) const;
  double jacobian_det(const Vec2& ref) const;
  /// Maps a physical point back to reference coordinates.
  Vec2 inverse(const Vec2& phys) const;

  Kind kind() const { return kind_; }
  bool is_affine() const { return kind_ == Kind::affine; }
  const std::array<Vec2, 4>& corners() const { return corners_; }

private:
  PatchMap(Kind kind, const std::array<Vec2, 4>& corners);
  void validate() const;

  Kind kind_;
  std::array<Vec2, 4> corners_;
};

struct MacroElement {
  std::array<int, 4> v;  // vertex ids at corner images (0,0),(1,0),(1,1),(0,1)
  PatchMap map;
};

/// Coarse quadrilateral decomposition of the domain. Immutable once built.
struct MacroTriangulation {
  std::vector<Vec2> vertices;
  std::vector<MacroElement> macros;
  std::set<std::pair<int, int>> boundary_edges;  // (macro index, local edge 0..3)
  std::vector<int> domain_corners;               // vertex ids of corners of the boundary

  // Local edge e joins corners e and (e+1)%4.
  std::pair<int, int> edge_vertices(int macro, int edge) const;
  bool edge_on_boundary(int macro, int edge) const;
  /// All physical boundary segments, one per flagged (macro, edge).
  std::vector<std::pair<Vec2, Vec2>> boundary_segments() const;

  nlohmann::json to_json() const;
};

/// The L-shaped domain (0,1)^2 minus [1/2,1)x[1/2,1) tiled by 12 congruent
/// axis-aligned squares of side 1/4. Each map is oriented so that boundary
/// edges pull back to the reference bottom (one edge) or bottom+left (two
/// edges), and a lone boundary vertex pulls back to (0,0).
MacroTriangulation build_lshape_macro();

/// True if the segment [a,b] lies on the boundary of the L-shaped domain.
bool lshape_segment_on_boundary(const Vec2& a, const Vec2& b);
bool lshape_point_on_boundary(const Vec2& p);

}  // namespace layerfem
