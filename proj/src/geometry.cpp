#include "layerfem/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace layerfem {

PatchMap::PatchMap(Kind kind, const std::array<Vec2, 4>& corners)
    : kind_(kind), corners_(corners) {
  validate();
}

PatchMap PatchMap::affine(const Vec2& origin, const Vec2& e1, const Vec2& e2) {
  std::array<Vec2, 4> c = {origin, origin + e1, origin + e1 + e2, origin + e2};
  return PatchMap(Kind::affine, c);
}

PatchMap PatchMap::bilinear(const std::array<Vec2, 4>& corners) {
  return PatchMap(Kind::bilinear, corners);
}

void PatchMap::validate() const {
  const Vec2 probes[5] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  for (const Vec2& q : probes) {
    if (jacobian(q).determinant() <= 0.0)
      throw std::invalid_argument("PatchMap: degenerate map (det <= 0)");
  }
}

Vec2 PatchMap::map(const Vec2& r) const {
  const double x = r.x(), y = r.y();
  return (1 - x) * (1 - y) * corners_[0] + x * (1 - y) * corners_[1] +
         x * y * corners_[2] + (1 - x) * y * corners_[3];
}

Mat2 PatchMap::jacobian(const Vec2& r) const {
  const double x = r.x(), y = r.y();
  Vec2 dx = (1 - y) * (corners_[1] - corners_[0]) + y * (corners_[2] - corners_[3]);
  Vec2 dy = (1 - x) * (corners_[3] - corners_[0]) + x * (corners_[2] - corners_[1]);
  Mat2 J;
  J.col(0) = dx;
  J.col(1) = dy;
  return J;
}

double PatchMap::jacobian_det(const Vec2& r) const {
  double d = jacobian(r).determinant();
  if (d <= 0.0) throw std::runtime_error("PatchMap: degenerate map (det <= 0)");
  return d;
}

Vec2 PatchMap::inverse(const Vec2& phys) const {
  if (is_affine()) {
    Mat2 J = jacobian(Vec2(0, 0));
    return J.partialPivLu().solve(phys - corners_[0]);
  }
  // Newton from the center; our quads are convex so this converges fast.
  Vec2 ref(0.5, 0.5);
  for (int it = 0; it < 30; ++it) {
    Vec2 res = map(ref) - phys;
    if (res.norm() < 1e-15) break;
    ref -= jacobian(ref).partialPivLu().solve(res);
  }
  return ref;
}

std::pair<int, int> MacroTriangulation::edge_vertices(int macro, int edge) const {
  const auto& m = macros[macro];
  return {m.v[edge], m.v[(edge + 1) % 4]};
}

bool MacroTriangulation::edge_on_boundary(int macro, int edge) const {
  return boundary_edges.count({macro, edge}) > 0;
}

std::vector<std::pair<Vec2, Vec2>> MacroTriangulation::boundary_segments() const {
  std::vector<std::pair<Vec2, Vec2>> segs;
  for (const auto& [m, e] : boundary_edges) {
    auto [a, b] = edge_vertices(m, e);
    segs.push_back({vertices[a], vertices[b]});
  }
  return segs;
}

nlohmann::json MacroTriangulation::to_json() const {
  nlohmann::json j;
  for (const auto& v : vertices) j["vertices"].push_back({v.x(), v.y()});
  for (const auto& m : macros) {
    nlohmann::json jm;
    jm["vertices"] = m.v;
    jm["map_kind"] = m.map.is_affine() ? "affine" : "bilinear";
    for (const auto& c : m.map.corners()) jm["map_corners"].push_back({c.x(), c.y()});
    j["macro_elements"].push_back(jm);
  }
  for (const auto& [m, e] : boundary_edges) j["boundary_edges"].push_back({m, e});
  j["domain_corners"] = domain_corners;
  return j;
}

namespace {

struct Segment {
  Vec2 a, b;
};

// The six straight pieces of the L-shape boundary, counterclockwise.
const std::array<Segment, 6> kLshapeBoundary = {{
    {{0.0, 0.0}, {1.0, 0.0}},
    {{1.0, 0.0}, {1.0, 0.5}},
    {{1.0, 0.5}, {0.5, 0.5}},
    {{0.5, 0.5}, {0.5, 1.0}},
    {{0.5, 1.0}, {0.0, 1.0}},
    {{0.0, 1.0}, {0.0, 0.0}},
}};

bool point_on_segment(const Vec2& p, const Segment& s) {
  Vec2 d = s.b - s.a;
  double t = d.dot(p - s.a) / d.squaredNorm();
  if (t < -1e-14 || t > 1.0 + 1e-14) return false;
  return (s.a + t * d - p).norm() <= 1e-14;
}

}  // namespace

bool lshape_point_on_boundary(const Vec2& p) {
  for (const auto& s : kLshapeBoundary)
    if (point_on_segment(p, s)) return true;
  return false;
}

bool lshape_segment_on_boundary(const Vec2& a, const Vec2& b) {
  for (const auto& s : kLshapeBoundary)
    if (point_on_segment(a, s) && point_on_segment(b, s) &&
        point_on_segment(Vec2(0.5 * (a + b)), s))
      return true;
  return false;
}

namespace {

Vec2 rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

MacroTriangulation build_lshape_macro() {
  MacroTriangulation tri;
  const double h = 0.25;

  auto vertex_id = [&](const Vec2& p) {
    for (size_t i = 0; i < tri.vertices.size(); ++i)
      if (tri.vertices[i] == p) return static_cast<int>(i);
    tri.vertices.push_back(p);
    return static_cast<int>(tri.vertices.size() - 1);
  };

  const Vec2 reentrant(0.5, 0.5);

  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) {
      if (i >= 2 && j >= 2) continue;  // removed quadrant
      const Vec2 p00(i * h, j * h), p10((i + 1) * h, j * h);
      const Vec2 p11((i + 1) * h, (j + 1) * h), p01(i * h, (j + 1) * h);
      const std::array<Vec2, 4> sq = {p00, p10, p11, p01};

      std::vector<std::pair<Vec2, Vec2>> bdry;  // boundary sides of this square
      for (int e = 0; e < 4; ++e) {
        Vec2 a = sq[e], b = sq[(e + 1) % 4];
        if (lshape_segment_on_boundary(a, b)) bdry.push_back({a, b});
      }

      PatchMap map = PatchMap::affine(p00, Vec2(h, 0), Vec2(0, h));
      if (bdry.size() == 2) {
        // Shared corner of the two boundary sides maps to (0,0).
        Vec2 corner, d1, d2;
        const auto& [a1, b1] = bdry[0];
        const auto& [a2, b2] = bdry[1];
        if (a1 == a2 || a1 == b2) corner = a1;
        else corner = b1;
        d1 = (a1 == corner) ? b1 - corner : a1 - corner;
        d2 = (a2 == corner) ? b2 - corner : a2 - corner;
        if (cross2(d1, d2) < 0) std::swap(d1, d2);
        map = PatchMap::affine(corner, d1, d2);
      } else if (bdry.size() == 1) {
        // Boundary side maps to the reference bottom, interior to the left.
        auto [a, b] = bdry[0];
        Vec2 center = 0.25 * (p00 + p10 + p11 + p01);
        if (rot90(b - a).dot(center - a) < 0) std::swap(a, b);
        map = PatchMap::affine(a, b - a, rot90(b - a));
      } else if (i == 1 && j == 1) {
        // Vertex-only contact at the reentrant corner: it maps to (0,0).
        Vec2 d1 = Vec2(-h, 0), d2 = Vec2(0, -h);
        if (cross2(d1, d2) < 0) std::swap(d1, d2);
        map = PatchMap::affine(reentrant, d1, d2);
      }

      MacroElement me{{0, 0, 0, 0}, map};
      for (int c = 0; c < 4; ++c) {
        static const Vec2 ref[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        me.v[c] = vertex_id(map.map(ref[c]));
      }
      tri.macros.push_back(me);
    }
  }

  for (size_t m = 0; m < tri.macros.size(); ++m) {
    for (int e = 0; e < 4; ++e) {
      auto [a, b] = tri.edge_vertices(static_cast<int>(m), e);
      if (lshape_segment_on_boundary(tri.vertices[a], tri.vertices[b]))
        tri.boundary_edges.insert({static_cast<int>(m), e});
    }
  }

  const std::array<Vec2, 6> corners = {{{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}}};
  for (const auto& c : corners) tri.domain_corners.push_back(vertex_id(c));
  return tri;
}

}  // namespace layerfem
