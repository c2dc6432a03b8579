#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "layerfem/mesh.hpp"

using namespace layerfem;

namespace {

// Independent cell-count oracle: ring enumeration plus the fixed outer cells.
int expected_cells(PatternKind kind, int levels) {
  switch (kind) {
    case PatternKind::trivial: return 1;
    case PatternKind::boundary_layer: return 2;
    default: {
      int cells = 1;                                    // innermost square
      for (int j = 0; j < levels; ++j) cells += 2;      // one ring = 2 trapezoids
      return cells + 3;                                 // strip + collar + large
    }
  }
}

double quad_area(const std::array<Vec2, 4>& v) {
  double a = 0.0;
  for (int i = 0; i < 4; ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % 4];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double edge_ratio(const std::array<Vec2, 4>& v) {
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double len = (v[(i + 1) % 4] - v[i]).norm();
    lo = std::min(lo, len);
    hi = std::max(hi, len);
  }
  return hi / lo;
}

// Edge scan inside one pattern: every cell side is either matched by exactly
// one neighbor side or lies on the boundary of the unit square.
bool pattern_conforming(const PatternMesh& pm) {
  std::map<std::pair<double, double>, int> vid;
  auto id = [&](const Vec2& p) {
    auto key = std::make_pair(p.x(), p.y());
    auto it = vid.find(key);
    if (it != vid.end()) return it->second;
    const int n = static_cast<int>(vid.size());
    vid[key] = n;
    return n;
  };
  std::map<std::pair<int, int>, int> count;
  std::map<std::pair<int, int>, std::pair<Vec2, Vec2>> rep;
  for (const PatternCell& cell : pm.cells) {
    for (int s = 0; s < 4; ++s) {
      const Vec2& a = cell.v[s];
      const Vec2& b = cell.v[(s + 1) % 4];
      auto key = std::minmax(id(a), id(b));
      count[{key.first, key.second}] += 1;
      rep[{key.first, key.second}] = {a, b};
    }
  }
  for (const auto& [key, n] : count) {
    if (n == 2) continue;
    if (n != 1) return false;
    const auto& [a, b] = rep[key];
    const bool on_unit_boundary =
        (a.x() == 0 && b.x() == 0) || (a.x() == 1 && b.x() == 1) ||
        (a.y() == 0 && b.y() == 0) || (a.y() == 1 && b.y() == 1);
    if (!on_unit_boundary) return false;
  }
  return true;
}

std::shared_ptr<const MacroTriangulation> lshape() {
  static auto macro = std::make_shared<const MacroTriangulation>(build_lshape_macro());
  return macro;
}

MeshParams lshape_params(int p, double eps, double lambda, double sigma, int levels) {
  MeshParams params;
  params.lambda = lambda;
  params.sigma = sigma;
  params.kappa = compute_kappa(lambda, p, eps);
  params.p = p;
  params.levels.assign(12, levels);
  return params;
}

}  // namespace

TEST_CASE("compute_kappa") {
  CHECK(compute_kappa(1, 4, 1e-3) == doctest::Approx(0.004).epsilon(1e-15));
  CHECK(compute_kappa(1, 2, 0.5) == doctest::Approx(0.5));
  CHECK(compute_kappa(0.5, 7, 1e-2) == doctest::Approx(0.035).epsilon(1e-15));
  CHECK_THROWS(compute_kappa(0, 1, 0.5));
  CHECK_THROWS(compute_kappa(1, 0, 0.5));
  CHECK_THROWS(compute_kappa(1, 1, 0.0));
  CHECK_THROWS(compute_kappa(1, 1, 2.0));
}

TEST_CASE("pattern cell counts match the enumeration oracle") {
  CHECK(build_pattern(PatternKind::boundary_layer, 0.1, 0.5, 0).cells.size() == 2);
  CHECK(build_pattern(PatternKind::tensor_product, 0.1, 0.5, 0).cells.size() == 4);
  for (int L = 0; L <= 10; ++L) {
    for (PatternKind kind :
         {PatternKind::tensor_product, PatternKind::mixed, PatternKind::geometric}) {
      CHECK(static_cast<int>(build_pattern(kind, 0.1, 0.5, L).cells.size()) ==
            expected_cells(kind, L));
    }
  }
}

TEST_CASE("patterns tile the unit square without hanging nodes") {
  for (double kappa : {0.05, 0.25, 0.5}) {
    for (double sigma : {0.3, 0.5, 0.6}) {
      for (int L : {0, 1, 2, 5, 10}) {
        for (bool mirrored : {false, true}) {
          PatternMesh pm = build_pattern(PatternKind::mixed, kappa, sigma, L, mirrored);
          double area = 0.0;
          for (const PatternCell& cell : pm.cells) {
            const double a = quad_area(cell.v);
            CHECK(a > 0.0);
            area += a;
          }
          CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
          CHECK(pattern_conforming(pm));
        }
      }
    }
  }
  CHECK(pattern_conforming(build_pattern(PatternKind::trivial, 0.5, 0.5, 0)));
  CHECK(pattern_conforming(build_pattern(PatternKind::boundary_layer, 0.17, 0.5, 0)));
}

TEST_CASE("aspect ratios: aniso cells are O(1/kappa), the rest shape regular") {
  for (double kappa : {0.01, 0.1, 0.5}) {
    for (double sigma : {0.4, 0.5}) {
      PatternMesh pm = build_pattern(PatternKind::tensor_product, kappa, sigma, 4);
      const double bound = std::max(1.0 / (1.0 - sigma), 2.0) + 1e-12;
      for (const PatternCell& cell : pm.cells) {
        const double ratio = edge_ratio(cell.v);
        if (cell.tag == RegionTag::aniso) {
          CHECK(ratio >= 0.4 * (1.0 / kappa));
          CHECK(ratio <= 1.0 / kappa + 1e-12);
        } else {
          CHECK(ratio <= bound);
        }
      }
    }
  }
}

TEST_CASE("corner-layer cells fill exactly the corner square") {
  const double kappa = 0.2, sigma = 0.5;
  for (bool mirrored : {false, true}) {
    PatternMesh pm = build_pattern(PatternKind::mixed, kappa, sigma, 3, mirrored);
    double cl_area = 0.0;
    for (const PatternCell& cell : pm.cells) {
      if (cell.tag != RegionTag::corner_layer) continue;
      cl_area += quad_area(cell.v);
      for (const Vec2& v : cell.v) {
        const double x = mirrored ? 1.0 - v.x() : v.x();
        CHECK(x >= -1e-15);
        CHECK(x <= kappa + 1e-15);
        CHECK(v.y() >= -1e-15);
        CHECK(v.y() <= kappa + 1e-15);
      }
    }
    CHECK(cl_area == doctest::Approx(kappa * kappa).epsilon(1e-12));
  }
}

TEST_CASE("build_pattern input validation") {
  CHECK_THROWS(build_pattern(PatternKind::boundary_layer, 0.0, 0.5, 0));
  CHECK_THROWS(build_pattern(PatternKind::boundary_layer, 0.6, 0.5, 0));
  CHECK_THROWS(build_pattern(PatternKind::tensor_product, 0.1, 1.0, 1));
  CHECK_THROWS(build_pattern(PatternKind::tensor_product, 0.1, 0.5, -1));
  // kappa * sigma^L underflow guard
  CHECK_THROWS(build_pattern(PatternKind::tensor_product, 0.5, 0.5, 1100));
}

TEST_CASE("generated L-shape mesh is conforming with the stated boundary gap") {
  MeshParams params = lshape_params(1, 1e-2, 1.0, 0.5, 2);
  Mesh mesh = generate_mesh(lshape(), lshape_default_assignment(), params);
  ConformityReport rep = check_conformity(mesh);
  CHECK(rep.pass);
  // Quarter-scale affine macros put the large cells kappa/4 from the boundary.
  CHECK(rep.omega0_boundary_dist == doctest::Approx(params.kappa / 4).epsilon(1e-12));
  CHECK(mesh.total_area(5) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("area conservation across parameter sweeps") {
  for (int p : {1, 3}) {
    for (double eps : {1e-2, 1e-5, 1e-8}) {
      MeshParams params = lshape_params(p, eps, 1.0, 0.5, p + 1);
      Mesh mesh = generate_mesh(lshape(), lshape_default_assignment(), params);
      CHECK(check_conformity(mesh).pass);
      CHECK(mesh.total_area(5) == doctest::Approx(0.75).epsilon(1e-12));
    }
  }
}

TEST_CASE("kappa at the cap keeps the mesh conforming") {
  MeshParams params = lshape_params(1, 1.0, 1.0, 0.5, 3);  // kappa = 1/2
  CHECK(params.kappa == doctest::Approx(0.5));
  Mesh mesh = generate_mesh(lshape(), lshape_default_assignment(), params);
  CHECK(check_conformity(mesh).pass);
  CHECK(mesh.total_area(5) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("region tags partition the element set") {
  MeshParams params = lshape_params(2, 1e-3, 1.0, 0.5, 3);
  Mesh mesh = generate_mesh(lshape(), lshape_default_assignment(), params);
  int large = 0, aniso = 0, cl = 0;
  for (const Element& el : mesh.elements) {
    if (el.tag == RegionTag::large) ++large;
    else if (el.tag == RegionTag::aniso) ++aniso;
    else ++cl;
  }
  CHECK(large == 12);       // one per patch
  CHECK(aniso == 24);       // strip + collar per patch
  CHECK(cl == 12 * (2 * 3 + 1));
  CHECK(large + aniso + cl == mesh.n_elements());
}

TEST_CASE("trivial patches only: element count equals macro count") {
  MeshParams params = lshape_params(1, 1e-2, 1.0, 0.5, 0);
  std::vector<PatternAssignment> trivial(12, {PatternKind::trivial, false});
  Mesh mesh = generate_mesh(lshape(), trivial, params, /*validate=*/false);
  CHECK(mesh.n_elements() == 12);
  CHECK(mesh.total_area(3) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("trivial patch on a boundary macro is rejected") {
  MeshParams params = lshape_params(1, 1e-2, 1.0, 0.5, 0);
  std::vector<PatternAssignment> bad = lshape_default_assignment();
  bad[1] = {PatternKind::trivial, false};
  CHECK_THROWS(generate_mesh(lshape(), bad, params));
}

TEST_CASE("mismatched kappa between manually built patches is reported") {
  auto macro = std::make_shared<MacroTriangulation>();
  macro->vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(2, 0), Vec2(0, 1), Vec2(1, 1), Vec2(2, 1)};
  macro->macros.push_back({{0, 1, 4, 3}, PatchMap::affine(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1))});
  macro->macros.push_back({{1, 2, 5, 4}, PatchMap::affine(Vec2(1, 0), Vec2(1, 0), Vec2(0, 1))});
  for (int m = 0; m < 2; ++m)
    for (int e : {0, 2}) macro->boundary_edges.insert({m, e});
  macro->boundary_edges.insert({0, 3});
  macro->boundary_edges.insert({1, 1});

  std::vector<PatternMesh> patches;
  patches.push_back(build_pattern(PatternKind::boundary_layer, 0.1, 0.5, 0));
  patches.push_back(build_pattern(PatternKind::boundary_layer, 0.2, 0.5, 0));
  MeshParams params;
  params.kappa = 0.1;
  params.levels.assign(2, 0);
  Mesh mesh = assemble_from_patterns(macro, std::move(patches), params, /*validate=*/false);
  ConformityReport rep = check_conformity(mesh);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.violations.empty());

  // Same patches with equal kappa pass.
  std::vector<PatternMesh> good;
  good.push_back(build_pattern(PatternKind::boundary_layer, 0.1, 0.5, 0));
  good.push_back(build_pattern(PatternKind::boundary_layer, 0.1, 0.5, 0));
  Mesh ok = assemble_from_patterns(macro, std::move(good), params, /*validate=*/false);
  CHECK(check_conformity(ok).pass);
}

TEST_CASE("single trivial-patch mesh passes conformity") {
  auto macro = std::make_shared<MacroTriangulation>();
  macro->vertices = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  macro->macros.push_back({{0, 1, 2, 3}, PatchMap::affine(Vec2(0, 0), Vec2(1, 0), Vec2(0, 1))});
  for (int e = 0; e < 4; ++e) macro->boundary_edges.insert({0, e});
  MeshParams params;
  params.kappa = 0.5;
  params.levels.assign(1, 0);
  std::vector<PatternMesh> patches = {build_pattern(PatternKind::trivial, 0.5, 0.5, 0)};
  Mesh mesh = assemble_from_patterns(macro, std::move(patches), params, /*validate=*/false);
  CHECK(check_conformity(mesh).pass);
}

TEST_CASE("mesh json dump carries params, elements, and the conformity report") {
  MeshParams params = lshape_params(1, 1e-2, 1.0, 0.5, 1);
  Mesh mesh = generate_mesh(lshape(), lshape_default_assignment(), params);
  nlohmann::json j = mesh_to_json(mesh);
  CHECK(j["params"]["kappa"] == doctest::Approx(0.01));
  CHECK(j["elements"].size() == static_cast<size_t>(mesh.n_elements()));
  CHECK(j["conformity"]["pass"] == true);
}
