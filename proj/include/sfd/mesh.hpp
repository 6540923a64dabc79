#pragma once

#include <sfd/types.hpp>

#include <string>

namespace sfd {

// Closed oriented triangle mesh with per-panel geometry frozen at
// construction time. Instances are immutable after validation and safe to
// share read-only across threads.
struct SurfaceMesh {
  PointMatrix vertices;      // V x 3
  TriangleMatrix triangles;  // F x 3, counterclockwise seen from outside
  PointMatrix normals;       // F x 3, unit outward
  Vector areas;              // F
  PointMatrix centroids;     // F x 3
  Vector diameters;          // F, longest edge per panel
  std::uint64_t provenance = 0;  // hash of vertex/triangle data

  Index num_vertices() const { return vertices.rows(); }
  Index num_panels() const { return triangles.rows(); }

  Mat3 panel_vertices(Index f) const;
  Real total_area() const { return areas.sum(); }
  Real signed_volume() const;
};

struct TopologySummary {
  Index V = 0;
  Index E = 0;
  Index F = 0;
  int euler_characteristic = 0;
  int genus = 0;  // summed over connected components
  int b1_boundary = 0;
  int b1_interior = 0;
  int b1_exterior = 0;
  int component_count = 0;
};

enum class MeshFormat { OFF, OBJ };

// Validates an indexed triangle soup and freezes the per-panel data. Throws
// MeshError naming the offending entity for non-manifold edges, inconsistent
// orientation, inward normals, or degenerate panels.
SurfaceMesh build_mesh(PointMatrix vertices, TriangleMatrix triangles);

SurfaceMesh load_mesh(const std::string& path);
SurfaceMesh load_mesh(const std::string& path, MeshFormat format);

// Geodesic sphere from a subdivided icosahedron; F = 20 * 4^subdivisions.
SurfaceMesh make_icosphere(int subdivisions, Real radius);

// Structured triangulation of the torus (sqrt(x^2+y^2) - R)^2 + z^2 = r^2.
SurfaceMesh make_torus(int n_major, int n_minor, Real major_radius, Real minor_radius);

// Euler characteristic, genus and first Betti numbers. The interior/exterior
// split defaults to the standard handlebody embedding (g, g); pass overrides
// for knotted inputs, the mesh combinatorics cannot detect those.
TopologySummary topology(const SurfaceMesh& mesh, int b1_interior_override = -1,
                         int b1_exterior_override = -1);

std::string mesh_summary_json(const SurfaceMesh& mesh, const TopologySummary& topo);

}  // namespace sfd
