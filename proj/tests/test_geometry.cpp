#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "layerfem/basis.hpp"
#include "layerfem/geometry.hpp"

using namespace layerfem;

TEST_CASE("map_point on elementary affine maps") {
  PatchMap id = PatchMap::affine(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1));
  CHECK(id.map(Vec2(0.3, 0.7)).isApprox(Vec2(0.3, 0.7)));

  PatchMap scaled = PatchMap::affine(Vec2(0.5, 0), Vec2(0.25, 0), Vec2(0, 0.25));
  CHECK(scaled.map(Vec2(0, 0)).isApprox(Vec2(0.5, 0)));

  PatchMap quarter = PatchMap::affine(Vec2(0, 0), Vec2(0.25, 0), Vec2(0, 0.25));
  CHECK(quarter.map(Vec2(1, 1)).isApprox(Vec2(0.25, 0.25)));
}

TEST_CASE("map_jacobian values and degeneracy detection") {
  PatchMap id = PatchMap::affine(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1));
  CHECK(id.jacobian(Vec2(0.2, 0.9)).isApprox(Mat2::Identity()));
  CHECK(id.jacobian_det(Vec2(0.5, 0.5)) == doctest::Approx(1.0));

  PatchMap quarter = PatchMap::affine(Vec2(0, 0), Vec2(0.25, 0), Vec2(0, 0.25));
  Mat2 expected = 0.25 * Mat2::Identity();
  CHECK(quarter.jacobian(Vec2(0.1, 0.4)).isApprox(expected));
  CHECK(quarter.jacobian_det(Vec2(0.1, 0.4)) == doctest::Approx(1.0 / 16));

  // A reflection has negative determinant and must be rejected.
  CHECK_THROWS(PatchMap::affine(Vec2(0, 0), Vec2(0, 1), Vec2(1, 0)));
}

TEST_CASE("affine jacobian is constant over the reference square") {
  PatchMap m = PatchMap::affine(Vec2(0.5, 0.25), Vec2(0, 0.25), Vec2(-0.25, 0));
  Mat2 J0 = m.jacobian(Vec2(0, 0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0, 1);
  for (int i = 0; i < 5; ++i) {
    Vec2 r(d(rng), d(rng));
    CHECK((m.jacobian(r) - J0).norm() <= 1e-15);
  }
}

TEST_CASE("bilinear map and inverse round trip") {
  std::array<Vec2, 4> c = {Vec2(0, 0), Vec2(1, 0.1), Vec2(1.1, 1.0), Vec2(-0.1, 0.9)};
  PatchMap m = PatchMap::bilinear(c);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(0, 1);
  for (int i = 0; i < 20; ++i) {
    Vec2 r(d(rng), d(rng));
    Vec2 back = m.inverse(m.map(r));
    CHECK((back - r).norm() <= 1e-12);
  }
}

namespace {

// Exhaustive boundary-contact classification of one axis-aligned square.
struct ContactOracle {
  int boundary_edges = 0;
  int lone_boundary_vertices = 0;
  bool two_edges_meet_at_domain_corner = false;
};

ContactOracle classify(const MacroTriangulation& tri, int m) {
  ContactOracle oracle;
  std::set<int> edge_vertices;
  std::vector<std::pair<int, int>> bedges;
  for (int e = 0; e < 4; ++e) {
    auto [a, b] = tri.edge_vertices(m, e);
    if (lshape_segment_on_boundary(tri.vertices[a], tri.vertices[b])) {
      ++oracle.boundary_edges;
      bedges.push_back({a, b});
      edge_vertices.insert(a);
      edge_vertices.insert(b);
    }
  }
  for (int c = 0; c < 4; ++c) {
    int v = tri.macros[m].v[c];
    if (!edge_vertices.count(v) && lshape_point_on_boundary(tri.vertices[v]))
      ++oracle.lone_boundary_vertices;
  }
  if (oracle.boundary_edges == 2) {
    std::set<int> corner_set(tri.domain_corners.begin(), tri.domain_corners.end());
    for (int v : {bedges[0].first, bedges[0].second})
      if ((v == bedges[1].first || v == bedges[1].second) && corner_set.count(v))
        oracle.two_edges_meet_at_domain_corner = true;
  }
  return oracle;
}

}  // namespace

TEST_CASE("L-shape macro triangulation") {
  MacroTriangulation tri = build_lshape_macro();

  SUBCASE("12 macro elements with total area 3/4") {
    CHECK(tri.macros.size() == 12);
    QuadratureRule q = gauss_rule(3);
    double area = 0.0;
    for (const auto& m : tri.macros)
      for (int a = 0; a < q.size(); ++a)
        for (int b = 0; b < q.size(); ++b)
          area += q.weights[a] * q.weights[b] *
                  m.map.jacobian_det(Vec2(q.nodes[a], q.nodes[b]));
    CHECK(area == doctest::Approx(0.75).epsilon(1e-12));
  }

  SUBCASE("every macro satisfies one of the four contact cases") {
    int n_two = 0, n_one = 0, n_vertex = 0, n_empty = 0;
    for (size_t m = 0; m < tri.macros.size(); ++m) {
      ContactOracle o = classify(tri, static_cast<int>(m));
      if (o.boundary_edges == 2) {
        CHECK(o.two_edges_meet_at_domain_corner);
        ++n_two;
      } else if (o.boundary_edges == 1) {
        ++n_one;
      } else if (o.lone_boundary_vertices == 1) {
        ++n_vertex;
      } else {
        CHECK(o.lone_boundary_vertices == 0);
        ++n_empty;
      }
      CHECK(o.boundary_edges <= 2);
    }
    CHECK(n_two == 5);
    CHECK(n_one == 6);
    CHECK(n_vertex == 1);
    CHECK(n_empty == 0);
  }

  SUBCASE("six macro vertices coincide with the domain corners") {
    CHECK(tri.domain_corners.size() == 6);
    const std::array<Vec2, 6> expected = {
        {{0, 0}, {1, 0}, {1, 0.5}, {0.5, 0.5}, {0.5, 1}, {0, 1}}};
    for (size_t i = 0; i < expected.size(); ++i)
      CHECK((tri.vertices[tri.domain_corners[i]] - expected[i]).norm() <= 1e-15);
  }

  SUBCASE("boundary edges pull back to the reference bottom/left") {
    for (const auto& [m, e] : tri.boundary_edges) CHECK((e == 0 || e == 3));
  }

  SUBCASE("shared edges agree at endpoints and midpoint") {
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> by_vertices;
    for (size_t m = 0; m < tri.macros.size(); ++m)
      for (int e = 0; e < 4; ++e) {
        auto [a, b] = tri.edge_vertices(static_cast<int>(m), e);
        by_vertices[{std::min(a, b), std::max(a, b)}].push_back({static_cast<int>(m), e});
      }
    int shared = 0;
    static const Vec2 corners[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    for (const auto& [key, sides] : by_vertices) {
      if (sides.size() != 2) continue;
      ++shared;
      for (double t : {0.0, 0.5, 1.0}) {
        Vec2 img[2];
        for (int s = 0; s < 2; ++s) {
          auto [m, e] = sides[s];
          bool fwd = tri.macros[m].v[e] == key.first;
          double tt = fwd ? t : 1.0 - t;
          Vec2 ref = (1 - tt) * corners[e] + tt * corners[(e + 1) % 4];
          img[s] = tri.macros[m].map.map(ref);
        }
        CHECK((img[0] - img[1]).norm() <= 1e-15);
      }
    }
    CHECK(shared == 16);
  }

  SUBCASE("json serialization carries the full structure") {
    nlohmann::json j = tri.to_json();
    CHECK(j["vertices"].size() == tri.vertices.size());
    CHECK(j["macro_elements"].size() == 12);
    CHECK(j["boundary_edges"].size() == tri.boundary_edges.size());
    CHECK(j["domain_corners"].size() == 6);
  }
}
