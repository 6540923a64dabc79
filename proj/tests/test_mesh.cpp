#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sfd/mesh.hpp>

#include <cmath>
#include <numbers>
#include <set>

using namespace sfd;

namespace {
constexpr Real kPi = std::numbers::pi_v<Real>;
}

TEST_CASE("icosphere basics") {
  const SurfaceMesh ico = make_icosphere(0, 1.0);
  CHECK(ico.num_vertices() == 12);
  CHECK(ico.num_panels() == 20);
  const TopologySummary topo = topology(ico);
  CHECK(topo.euler_characteristic == 2);
  CHECK(topo.genus == 0);
  CHECK(topo.b1_boundary == 0);
  CHECK(topo.component_count == 1);

  const SurfaceMesh s3 = make_icosphere(3, 1.0);
  CHECK(s3.num_panels() == 1280);
  Real max_dev = 0;
  for (Index i = 0; i < s3.num_vertices(); ++i)
    max_dev = std::max(max_dev, std::abs(s3.vertices.row(i).norm() - 1.0));
  CHECK(max_dev < 1e-14);
  CHECK(topology(s3).euler_characteristic == 2);
}

TEST_CASE("icosphere area approaches the analytic sphere area") {
  const SurfaceMesh s = make_icosphere(2, 2.0);
  const Real exact = 4.0 * kPi * 4.0;
  CHECK(std::abs(s.total_area() - exact) / exact < 0.02);
}

TEST_CASE("icosphere guards") {
  CHECK_THROWS_AS(make_icosphere(8, 1.0), MeshError);
  CHECK_THROWS_AS(make_icosphere(-1, 1.0), MeshError);
  CHECK_THROWS_AS(make_icosphere(1, 0.0), MeshError);
}

TEST_CASE("torus generation and topology") {
  const SurfaceMesh t = make_torus(16, 16, 2.0, 0.5);
  CHECK(t.num_vertices() == 256);
  CHECK(t.num_panels() == 512);
  const TopologySummary topo = topology(t);
  CHECK(topo.euler_characteristic == 0);
  CHECK(topo.genus == 1);
  CHECK(topo.b1_boundary == 2);
  CHECK(topo.b1_interior == 1);
  CHECK(topo.b1_exterior == 1);
  CHECK(t.signed_volume() > 0);

  // an inscribed triangulation undershoots the smooth area by ~1.04% at
  // 32x16; the deficit must shrink under refinement
  const SurfaceMesh fine = make_torus(32, 16, 2.0, 0.5);
  const Real exact = 4.0 * kPi * kPi * 2.0 * 0.5;
  const Real err_fine = std::abs(fine.total_area() - exact) / exact;
  CHECK(err_fine < 0.015);
  const SurfaceMesh finer = make_torus(64, 32, 2.0, 0.5);
  CHECK(std::abs(finer.total_area() - exact) / exact < err_fine / 3.0);
  CHECK(topology(fine).euler_characteristic == 0);

  CHECK_THROWS_AS(make_torus(2, 16, 2.0, 0.5), MeshError);
  CHECK_THROWS_AS(make_torus(16, 16, 0.5, 2.0), MeshError);
}

TEST_CASE("b1 overrides must respect the boundary sum") {
  const SurfaceMesh t = make_torus(8, 8, 2.0, 0.5);
  const TopologySummary topo = topology(t, 2, 0);
  CHECK(topo.b1_interior == 2);
  CHECK(topo.b1_exterior == 0);
  CHECK_THROWS_AS(topology(t, 2, 2), MeshError);
}

TEST_CASE("bundled mesh files load") {
  const SurfaceMesh ico = load_mesh(std::string(SFD_DATA_DIR) + "/icosahedron.off");
  CHECK(ico.num_vertices() == 12);
  CHECK(ico.num_panels() == 20);

  const SurfaceMesh torus = load_mesh(std::string(SFD_DATA_DIR) + "/torus_16x16.obj");
  CHECK(torus.num_vertices() == 256);
  CHECK(torus.num_panels() == 512);
  CHECK(topology(torus).b1_boundary == 2);
}

TEST_CASE("flipped triangle is reported with the offending edge") {
  SurfaceMesh good = make_icosphere(0, 1.0);
  TriangleMatrix tris = good.triangles;
  std::swap(tris(7, 0), tris(7, 1));
  try {
    build_mesh(good.vertices, tris);
    FAIL("expected orientation error");
  } catch (const MeshError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("orientation") != std::string::npos);
    CHECK(msg.find("(") != std::string::npos);  // names the directed edge
  }
}

TEST_CASE("non-manifold and open meshes are rejected") {
  // a single tetrahedron face sheet (open)
  PointMatrix v(4, 3);
  v << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  TriangleMatrix f(2, 3);
  f << 0, 1, 2, 0, 3, 1;
  CHECK_THROWS_AS(build_mesh(v, f), MeshError);
}

TEST_CASE("inward orientation rejected globally") {
  SurfaceMesh good = make_icosphere(1, 1.0);
  TriangleMatrix flipped = good.triangles;
  flipped.col(0).swap(flipped.col(1));
  CHECK_THROWS_WITH_AS(build_mesh(good.vertices, flipped),
                       doctest::Contains("inward"), MeshError);
}

TEST_CASE("two-component mesh is detected") {
  const SurfaceMesh a = make_icosphere(0, 1.0);
  PointMatrix v(2 * a.num_vertices(), 3);
  v.topRows(a.num_vertices()) = a.vertices;
  v.bottomRows(a.num_vertices()) = a.vertices;
  v.bottomRows(a.num_vertices()).col(0).array() += 5.0;
  TriangleMatrix f(2 * a.num_panels(), 3);
  f.topRows(a.num_panels()) = a.triangles;
  f.bottomRows(a.num_panels()) = a.triangles.array() + static_cast<int>(a.num_vertices());
  const SurfaceMesh two = build_mesh(v, f);
  CHECK(topology(two).component_count == 2);
}

TEST_CASE("every edge appears twice with opposite orientation on generated meshes") {
  for (const SurfaceMesh& m : {make_icosphere(1, 1.0), make_torus(8, 6, 2.0, 0.5)}) {
    std::set<std::pair<int, int>> directed;
    for (Index fidx = 0; fidx < m.num_panels(); ++fidx)
      for (int k = 0; k < 3; ++k)
        directed.insert({m.triangles(fidx, k), m.triangles(fidx, (k + 1) % 3)});
    CHECK(directed.size() == static_cast<std::size_t>(3 * m.num_panels()));
    for (const auto& e : directed)
      CHECK(directed.count({e.second, e.first}) == 1);
    CHECK(m.signed_volume() > 0);
  }
}

TEST_CASE("refinement keeps the Euler characteristic") {
  CHECK(topology(make_icosphere(1, 1.0)).euler_characteristic == 2);
  CHECK(topology(make_icosphere(2, 1.0)).euler_characteristic == 2);
  CHECK(topology(make_torus(8, 6, 2.0, 0.5)).euler_characteristic == 0);
  CHECK(topology(make_torus(16, 12, 2.0, 0.5)).euler_characteristic == 0);
}

TEST_CASE("summary json carries the documented keys") {
  const SurfaceMesh t = make_torus(8, 8, 2.0, 0.5);
  const std::string json = mesh_summary_json(t, topology(t));
  for (const char* key : {"\"V\"", "\"E\"", "\"F\"", "\"chi\"", "\"genus\"", "\"b1_boundary\"",
                          "\"b1_interior\"", "\"b1_exterior\"", "\"area\"", "\"volume\""})
    CHECK(json.find(key) != std::string::npos);
}

TEST_CASE("parse failures carry diagnostics") {
  CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.off"), MeshError);
  CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.stl"), MeshError);
}
