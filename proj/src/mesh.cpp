#include <sfd/mesh.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <vector>

namespace sfd {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_mesh_data(const PointMatrix& v, const TriangleMatrix& t) {
  std::uint64_t h = 1469598103934665603ull;
  h = fnv1a(v.data(), sizeof(Real) * static_cast<std::size_t>(v.size()), h);
  h = fnv1a(t.data(), sizeof(int) * static_cast<std::size_t>(t.size()), h);
  return h;
}

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

Mat3 SurfaceMesh::panel_vertices(Index f) const {
  Mat3 v;
  for (int k = 0; k < 3; ++k) v.row(k) = vertices.row(triangles(f, k));
  return v;
}

Real SurfaceMesh::signed_volume() const {
  Real vol = 0;
  for (Index f = 0; f < num_panels(); ++f)
    vol += areas[f] * centroids.row(f).dot(normals.row(f));
  return vol / 3.0;
}

SurfaceMesh build_mesh(PointMatrix vertices, TriangleMatrix triangles) {
  const Index nv = vertices.rows();
  const Index nf = triangles.rows();
  if (nv < 4 || nf < 4) throw MeshError("mesh too small to bound a volume");

  for (Index f = 0; f < nf; ++f)
    for (int k = 0; k < 3; ++k) {
      const int i = triangles(f, k);
      if (i < 0 || i >= nv)
        throw MeshError("triangle " + std::to_string(f) + " references invalid vertex " +
                        std::to_string(i));
    }

  // Each directed edge must appear exactly once, each undirected edge exactly
  // twice; that is closed + oriented + manifold in one bookkeeping pass.
  std::map<std::pair<int, int>, int> directed;
  for (Index f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = triangles(f, k);
      const int b = triangles(f, (k + 1) % 3);
      if (a == b)
        throw MeshError("triangle " + std::to_string(f) + " is degenerate (repeated vertex " +
                        std::to_string(a) + ")");
      auto [it, inserted] = directed.try_emplace({a, b}, static_cast<int>(f));
      if (!inserted)
        throw MeshError("inconsistent orientation: directed edge (" + std::to_string(a) + "," +
                        std::to_string(b) + ") shared by triangles " + std::to_string(it->second) +
                        " and " + std::to_string(f));
    }
  }
  for (const auto& [e, f] : directed) {
    if (directed.find({e.second, e.first}) == directed.end())
      throw MeshError("non-manifold or open edge (" + std::to_string(e.first) + "," +
                      std::to_string(e.second) + ") at triangle " + std::to_string(f));
  }

  SurfaceMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.triangles = std::move(triangles);
  mesh.normals.resize(nf, 3);
  mesh.areas.resize(nf);
  mesh.centroids.resize(nf, 3);
  mesh.diameters.resize(nf);

  const Vec3 lo = mesh.vertices.colwise().minCoeff();
  const Vec3 hi = mesh.vertices.colwise().maxCoeff();
  const Real bbox_diag2 = (hi - lo).squaredNorm();

  for (Index f = 0; f < nf; ++f) {
    const Vec3 p0 = mesh.vertices.row(mesh.triangles(f, 0));
    const Vec3 p1 = mesh.vertices.row(mesh.triangles(f, 1));
    const Vec3 p2 = mesh.vertices.row(mesh.triangles(f, 2));
    const Vec3 cross = (p1 - p0).cross(p2 - p0);
    const Real area = 0.5 * cross.norm();
    if (area <= 1e-12 * bbox_diag2)
      throw MeshError("degenerate panel " + std::to_string(f) + " (area " + std::to_string(area) +
                      ")");
    mesh.areas[f] = area;
    mesh.normals.row(f) = cross / cross.norm();
    mesh.centroids.row(f) = (p0 + p1 + p2) / 3.0;
    mesh.diameters[f] =
        std::max({(p1 - p0).norm(), (p2 - p1).norm(), (p0 - p2).norm()});
  }

  const Real vol = mesh.signed_volume();
  if (vol <= 0)
    throw MeshError("normals point inward (signed volume " + std::to_string(vol) +
                    "); check triangle winding");

  mesh.provenance = hash_mesh_data(mesh.vertices, mesh.triangles);
  return mesh;
}

namespace {

SurfaceMesh parse_off(std::istream& in, const std::string& path) {
  auto next_line = [&in](std::string& line) {
    while (std::getline(in, line)) {
      const auto pos = line.find_first_not_of(" \t\r\n");
      if (pos == std::string::npos) continue;
      if (line[pos] == '#') continue;
      return true;
    }
    return false;
  };

  std::string line;
  if (!next_line(line)) throw MeshError(path + ": empty OFF file");
  {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != "OFF") throw MeshError(path + ": missing OFF header");
  }
  if (!next_line(line)) throw MeshError(path + ": missing count line");
  Index nv = 0, nf = 0;
  long ne = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> nv >> nf >> ne)) throw MeshError(path + ": malformed count line '" + line + "'");
  }

  PointMatrix vertices(nv, 3);
  for (Index i = 0; i < nv; ++i) {
    if (!next_line(line)) throw MeshError(path + ": unexpected end of file in vertex list");
    std::istringstream ss(line);
    if (!(ss >> vertices(i, 0) >> vertices(i, 1) >> vertices(i, 2)))
      throw MeshError(path + ": malformed vertex line '" + line + "'");
  }
  TriangleMatrix triangles(nf, 3);
  for (Index f = 0; f < nf; ++f) {
    if (!next_line(line)) throw MeshError(path + ": unexpected end of file in face list");
    std::istringstream ss(line);
    int arity = 0;
    if (!(ss >> arity)) throw MeshError(path + ": malformed face line '" + line + "'");
    if (arity != 3)
      throw MeshError(path + ": face " + std::to_string(f) + " has " + std::to_string(arity) +
                      " vertices; only triangles are supported");
    if (!(ss >> triangles(f, 0) >> triangles(f, 1) >> triangles(f, 2)))
      throw MeshError(path + ": malformed face line '" + line + "'");
  }
  return build_mesh(std::move(vertices), std::move(triangles));
}

SurfaceMesh parse_obj(std::istream& in, const std::string& path) {
  std::vector<std::array<Real, 3>> verts;
  std::vector<std::array<int, 3>> tris;
  std::string line;
  Index lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      std::array<Real, 3> p{};
      if (!(ss >> p[0] >> p[1] >> p[2]))
        throw MeshError(path + ":" + std::to_string(lineno) + ": malformed vertex");
      verts.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // accept v, v/t, v//n, v/t/n references; only the vertex index is used
        const auto slash = tok.find('/');
        const std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
        int i = 0;
        try {
          i = std::stoi(head);
        } catch (const std::exception&) {
          throw MeshError(path + ":" + std::to_string(lineno) + ": malformed face index '" + tok +
                          "'");
        }
        if (i < 0) i = static_cast<int>(verts.size()) + 1 + i;  // negative = relative
        idx.push_back(i - 1);
      }
      if (idx.size() != 3)
        throw MeshError(path + ":" + std::to_string(lineno) + ": face has " +
                        std::to_string(idx.size()) + " vertices; only triangles are supported");
      tris.push_back({idx[0], idx[1], idx[2]});
    }
    // all other tags (vn, vt, usemtl, ...) are ignored
  }
  if (verts.empty() || tris.empty()) throw MeshError(path + ": no triangle data found");

  PointMatrix vertices(static_cast<Index>(verts.size()), 3);
  for (Index i = 0; i < vertices.rows(); ++i)
    vertices.row(i) << verts[i][0], verts[i][1], verts[i][2];
  TriangleMatrix triangles(static_cast<Index>(tris.size()), 3);
  for (Index f = 0; f < triangles.rows(); ++f)
    triangles.row(f) << tris[f][0], tris[f][1], tris[f][2];
  return build_mesh(std::move(vertices), std::move(triangles));
}

}  // namespace

SurfaceMesh load_mesh(const std::string& path, MeshFormat format) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  return format == MeshFormat::OFF ? parse_off(in, path) : parse_obj(in, path);
}

SurfaceMesh load_mesh(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::string lower;
  for (char c : ext) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "off") return load_mesh(path, MeshFormat::OFF);
  if (lower == "obj") return load_mesh(path, MeshFormat::OBJ);
  throw MeshError("unrecognized mesh extension '" + ext + "' (expected .off or .obj)");
}

namespace {

struct IcosahedronData {
  PointMatrix vertices;
  TriangleMatrix triangles;
};

IcosahedronData icosahedron() {
  const Real t = (1.0 + std::sqrt(5.0)) / 2.0;
  PointMatrix v(12, 3);
  v << -1, t, 0, 1, t, 0, -1, -t, 0, 1, -t, 0, 0, -1, t, 0, 1, t, 0, -1, -t, 0, 1, -t, t, 0, -1,
      t, 0, 1, -t, 0, -1, -t, 0, 1;
  v.rowwise().normalize();
  TriangleMatrix f(20, 3);
  f << 0, 11, 5, 0, 5, 1, 0, 1, 7, 0, 7, 10, 0, 10, 11, 1, 5, 9, 5, 11, 4, 11, 10, 2, 10, 7, 6, 7,
      1, 8, 3, 9, 4, 3, 4, 2, 3, 2, 6, 3, 6, 8, 3, 8, 9, 4, 9, 5, 2, 4, 11, 6, 2, 10, 8, 6, 7, 9,
      8, 1;
  return {v, f};
}

}  // namespace

SurfaceMesh make_icosphere(int subdivisions, Real radius) {
  if (subdivisions < 0) throw MeshError("icosphere subdivisions must be >= 0");
  if (subdivisions > 7) throw MeshError("icosphere subdivisions > 7 exceeds the size guard");
  if (!(radius > 0)) throw MeshError("icosphere radius must be positive");

  auto [verts, tris] = icosahedron();
  std::vector<std::array<Real, 3>> v;
  for (Index i = 0; i < verts.rows(); ++i) v.push_back({verts(i, 0), verts(i, 1), verts(i, 2)});
  std::vector<std::array<int, 3>> f;
  for (Index k = 0; k < tris.rows(); ++k) f.push_back({tris(k, 0), tris(k, 1), tris(k, 2)});

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m(v[a][0] + v[b][0], v[a][1] + v[b][1], v[a][2] + v[b][2]);
      m.normalize();
      v.push_back({m[0], m[1], m[2]});
      const int idx = static_cast<int>(v.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int ab = mid(tri[0], tri[1]);
      const int bc = mid(tri[1], tri[2]);
      const int ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }

  PointMatrix vertices(static_cast<Index>(v.size()), 3);
  for (Index i = 0; i < vertices.rows(); ++i) {
    Vec3 p(v[i][0], v[i][1], v[i][2]);
    vertices.row(i) = radius * p.normalized();
  }
  TriangleMatrix triangles(static_cast<Index>(f.size()), 3);
  for (Index k = 0; k < triangles.rows(); ++k)
    triangles.row(k) << f[k][0], f[k][1], f[k][2];
  return build_mesh(std::move(vertices), std::move(triangles));
}

SurfaceMesh make_torus(int n_major, int n_minor, Real major_radius, Real minor_radius) {
  if (n_major < 3 || n_minor < 3) throw MeshError("torus grid sizes must be >= 3");
  if (!(minor_radius > 0) || !(minor_radius < major_radius))
    throw MeshError("torus radii must satisfy 0 < r < R");

  constexpr Real two_pi = 2 * std::numbers::pi_v<Real>;
  PointMatrix vertices(static_cast<Index>(n_major) * n_minor, 3);
  for (int i = 0; i < n_major; ++i) {
    const Real theta = two_pi * i / n_major;
    for (int j = 0; j < n_minor; ++j) {
      const Real phi = two_pi * j / n_minor;
      const Real ring = major_radius + minor_radius * std::cos(phi);
      vertices.row(static_cast<Index>(i) * n_minor + j) << ring * std::cos(theta),
          ring * std::sin(theta), minor_radius * std::sin(phi);
    }
  }

  TriangleMatrix triangles(2 * static_cast<Index>(n_major) * n_minor, 3);
  Index t = 0;
  auto vid = [&](int i, int j) { return ((i % n_major) * n_minor + (j % n_minor)); };
  for (int i = 0; i < n_major; ++i)
    for (int j = 0; j < n_minor; ++j) {
      const int a = vid(i, j);
      const int b = vid(i + 1, j);
      const int c = vid(i + 1, j + 1);
      const int d = vid(i, j + 1);
      triangles.row(t++) << a, b, c;
      triangles.row(t++) << a, c, d;
    }
  return build_mesh(std::move(vertices), std::move(triangles));
}

TopologySummary topology(const SurfaceMesh& mesh, int b1_interior_override,
                         int b1_exterior_override) {
  TopologySummary topo;
  topo.V = mesh.num_vertices();
  topo.F = mesh.num_panels();
  topo.E = 3 * mesh.num_panels() / 2;  // closed manifold: each edge shared by two triangles
  topo.euler_characteristic = static_cast<int>(topo.V - topo.E + topo.F);

  DisjointSet ds(static_cast<int>(topo.V));
  for (Index f = 0; f < mesh.num_panels(); ++f) {
    ds.unite(mesh.triangles(f, 0), mesh.triangles(f, 1));
    ds.unite(mesh.triangles(f, 1), mesh.triangles(f, 2));
  }
  std::vector<int> roots;
  std::vector<Index> vcount(topo.V, 0), fcount(topo.V, 0), ecount(topo.V, 0);
  for (Index i = 0; i < topo.V; ++i) ++vcount[ds.find(static_cast<int>(i))];
  for (Index f = 0; f < mesh.num_panels(); ++f) {
    const int r = ds.find(mesh.triangles(f, 0));
    ++fcount[r];
    ecount[r] += 3;  // per-component E = 3F/2 on a closed manifold
  }
  int genus_total = 0;
  for (Index i = 0; i < topo.V; ++i) {
    if (vcount[i] == 0) continue;
    ++topo.component_count;
    const long chi_c = static_cast<long>(vcount[i]) - ecount[i] / 2 + fcount[i];
    if (chi_c % 2 != 0) throw MeshError("component Euler characteristic is odd; mesh is broken");
    genus_total += static_cast<int>((2 - chi_c) / 2);
  }
  topo.genus = genus_total;
  topo.b1_boundary = 2 * genus_total;
  topo.b1_interior = b1_interior_override >= 0 ? b1_interior_override : genus_total;
  topo.b1_exterior = b1_exterior_override >= 0 ? b1_exterior_override : genus_total;
  if (topo.b1_interior + topo.b1_exterior != topo.b1_boundary)
    throw MeshError("b1 overrides violate b1_interior + b1_exterior = b1_boundary");
  return topo;
}

std::string mesh_summary_json(const SurfaceMesh& mesh, const TopologySummary& topo) {
  std::ostringstream os;
  os.precision(15);
  os << "{\"V\":" << topo.V << ",\"E\":" << topo.E << ",\"F\":" << topo.F
     << ",\"chi\":" << topo.euler_characteristic << ",\"genus\":" << topo.genus
     << ",\"b1_boundary\":" << topo.b1_boundary << ",\"b1_interior\":" << topo.b1_interior
     << ",\"b1_exterior\":" << topo.b1_exterior << ",\"component_count\":" << topo.component_count
     << ",\"area\":" << mesh.total_area() << ",\"volume\":" << mesh.signed_volume() << "}";
  return os.str();
}

}  // namespace sfd
