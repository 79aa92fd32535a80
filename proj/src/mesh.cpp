#include "tot/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Geometry>

#include "tot/error.hpp"

namespace tot {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::NonManifold: return "non-manifold";
    case ErrorCode::Topology: return "topology";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::DuplicateSites: return "duplicate-sites";
    case ErrorCode::SolverFailure: return "solver-failure";
    case ErrorCode::Flipped: return "flipped";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

// Directed half-edge i->j; each must occur at most once on an oriented
// manifold, and a boundary half-edge is one whose twin is missing.
std::vector<bool> validate_and_flag_boundary(std::size_t num_vertices,
                                             const std::vector<Face>& faces) {
  if (faces.empty()) throw Error(ErrorCode::Topology, "mesh has no faces");

  std::unordered_map<std::uint64_t, int> undirected;
  std::unordered_map<std::uint64_t, int> directed;
  auto dkey = [](int i, int j) {
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
  };

  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || static_cast<std::size_t>(t[k]) >= num_vertices)
        throw Error(ErrorCode::Parse, "face " + std::to_string(f) +
                                          " references invalid vertex " +
                                          std::to_string(t[k]));
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw Error(ErrorCode::Degenerate,
                  "face " + std::to_string(f) + " repeats a vertex");
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (++undirected[EdgeMap::key(a, b)] > 2)
        throw Error(ErrorCode::NonManifold,
                    "edge (" + std::to_string(a) + "," + std::to_string(b) +
                        ") has more than two incident faces");
      if (++directed[dkey(a, b)] > 1)
        throw Error(ErrorCode::Topology,
                    "inconsistent face orientation at edge (" +
                        std::to_string(a) + "," + std::to_string(b) + ")");
    }
  }

  std::vector<bool> boundary(num_vertices, false);
  std::vector<int> used(num_vertices, 0);
  std::unordered_map<int, int> next;  // boundary successor
  for (const Face& t : faces) {
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      used[a] = 1;
      if (!directed.count(dkey(b, a))) {
        boundary[a] = boundary[b] = true;
        if (!next.emplace(a, b).second)
          throw Error(ErrorCode::NonManifold,
                      "boundary vertex " + std::to_string(a) +
                          " is a pinch point");
      }
    }
  }
  for (std::size_t i = 0; i < num_vertices; ++i)
    if (!used[i])
      throw Error(ErrorCode::Topology,
                  "vertex " + std::to_string(i) + " is not referenced by any face");

  std::vector<int> parent(num_vertices);
  std::iota(parent.begin(), parent.end(), 0);
  for (const Face& t : faces) {
    parent[find_root(parent, t[1])] = find_root(parent, t[0]);
    parent[find_root(parent, t[2])] = find_root(parent, t[0]);
  }
  int root = find_root(parent, faces[0][0]);
  for (std::size_t i = 0; i < num_vertices; ++i)
    if (find_root(parent, static_cast<int>(i)) != root)
      throw Error(ErrorCode::Topology, "mesh has more than one connected component");

  if (next.empty())
    throw Error(ErrorCode::Topology, "mesh is closed (no boundary loop)");
  std::size_t visited = 0;
  int start = next.begin()->first, v = start;
  do {
    v = next.at(v);
    ++visited;
  } while (v != start && visited <= next.size());
  if (visited != next.size())
    throw Error(ErrorCode::Topology, "mesh has more than one boundary loop");
  return boundary;
}

}  // namespace

TriMesh TriMesh::create(std::vector<Vec3> vertices, std::vector<Face> faces,
                        int dim, std::optional<std::vector<double>> gray) {
  if (dim != 2 && dim != 3)
    throw Error(ErrorCode::InvalidArgument, "mesh dimension must be 2 or 3");
  if (gray && gray->size() != vertices.size())
    throw Error(ErrorCode::InvalidArgument, "gray channel size mismatch");
  auto boundary = validate_and_flag_boundary(vertices.size(), faces);
  TriMesh m;
  m.vertices_ = std::move(vertices);
  if (dim == 2)
    for (auto& v : m.vertices_) v.z() = 0.0;
  m.faces_ = std::make_shared<const std::vector<Face>>(std::move(faces));
  m.boundary_ = std::make_shared<const std::vector<bool>>(std::move(boundary));
  m.gray_ = std::move(gray);
  m.dim_ = dim;
  return m;
}

TriMesh TriMesh::create_2d(std::span<const Vec2> vertices, std::vector<Face> faces,
                           std::optional<std::vector<double>> gray) {
  std::vector<Vec3> v3;
  v3.reserve(vertices.size());
  for (const Vec2& p : vertices) v3.emplace_back(p.x(), p.y(), 0.0);
  return create(std::move(v3), std::move(faces), 2, std::move(gray));
}

std::vector<Vec2> TriMesh::positions_2d() const {
  std::vector<Vec2> out;
  out.reserve(vertices_.size());
  for (const Vec3& v : vertices_) out.emplace_back(v.x(), v.y());
  return out;
}

TriMesh TriMesh::with_positions(std::span<const Vec2> positions) const {
  if (positions.size() != vertices_.size())
    throw Error(ErrorCode::InvalidArgument, "position count mismatch");
  TriMesh m = *this;
  m.dim_ = 2;
  for (std::size_t i = 0; i < positions.size(); ++i)
    m.vertices_[i] = Vec3(positions[i].x(), positions[i].y(), 0.0);
  return m;
}

TriMesh TriMesh::with_gray(std::vector<double> gray) const {
  if (gray.size() != vertices_.size())
    throw Error(ErrorCode::InvalidArgument, "gray channel size mismatch");
  TriMesh m = *this;
  m.gray_ = std::move(gray);
  return m;
}

double signed_area_2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

double face_area(const TriMesh& mesh, int f) {
  const Face& t = mesh.faces()[f];
  const Vec3& a = mesh.vertex(t[0]);
  return 0.5 * (mesh.vertex(t[1]) - a).cross(mesh.vertex(t[2]) - a).norm();
}

double total_area(const TriMesh& mesh) {
  double sum = 0.0;
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) sum += face_area(mesh, static_cast<int>(f));
  return sum;
}

double vertex_area(const TriMesh& mesh, int i) {
  if (i < 0 || static_cast<std::size_t>(i) >= mesh.num_vertices())
    throw Error(ErrorCode::InvalidArgument, "vertex index out of range");
  double sum = 0.0;
  const auto& faces = mesh.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    if (t[0] == i || t[1] == i || t[2] == i) sum += face_area(mesh, static_cast<int>(f));
  }
  return sum / 3.0;
}

std::vector<double> vertex_areas(const TriMesh& mesh) {
  std::vector<double> a(mesh.num_vertices(), 0.0);
  const auto& faces = mesh.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    double third = face_area(mesh, static_cast<int>(f)) / 3.0;
    for (int v : faces[f]) a[v] += third;
  }
  return a;
}

bool is_degenerate_triangle(double l0, double l1, double l2) {
  double s = 0.5 * (l0 + l1 + l2);
  double q = s * (s - l0) * (s - l1) * (s - l2);
  double longest = std::max({l0, l1, l2});
  if (!(q > 0.0)) return true;
  return std::sqrt(q) < 1e-14 * longest * longest;
}

namespace {

void add_face_cotangents(EdgeWeightMap& w, const Face& t, const std::array<double, 3>& l,
                         std::size_t f) {
  // l[k] is the length of the edge opposite corner k.
  if (is_degenerate_triangle(l[0], l[1], l[2]))
    throw Error(ErrorCode::Degenerate,
                "degenerate triangle " + std::to_string(f) + " under the edge metric");
  double s = 0.5 * (l[0] + l[1] + l[2]);
  double area = std::sqrt(s * (s - l[0]) * (s - l[1]) * (s - l[2]));
  for (int k = 0; k < 3; ++k) {
    double a = l[(k + 1) % 3], b = l[(k + 2) % 3];
    w(t[(k + 1) % 3], t[(k + 2) % 3]) += (a * a + b * b - l[k] * l[k]) / (4.0 * area);
  }
}

}  // namespace

EdgeWeightMap cotangent_weights(const TriMesh& mesh, const EdgeLengthMap* edge_lengths) {
  EdgeWeightMap w;
  const auto& faces = mesh.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    std::array<double, 3> l{};
    for (int k = 0; k < 3; ++k) {
      int a = t[(k + 1) % 3], b = t[(k + 2) % 3];
      l[k] = edge_lengths ? edge_lengths->at(a, b) : (mesh.vertex(a) - mesh.vertex(b)).norm();
    }
    add_face_cotangents(w, t, l, f);
  }
  return w;
}

EdgeWeightMap cotangent_weights(std::span<const Face> faces, const EdgeLengthMap& edge_lengths) {
  EdgeWeightMap w;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    std::array<double, 3> l{};
    for (int k = 0; k < 3; ++k) l[k] = edge_lengths.at(t[(k + 1) % 3], t[(k + 2) % 3]);
    add_face_cotangents(w, t, l, f);
  }
  return w;
}

std::vector<int> boundary_loop(const TriMesh& mesh) {
  std::unordered_map<int, int> next;
  std::unordered_map<std::uint64_t, bool> directed;
  auto dkey = [](int i, int j) {
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
  };
  for (const Face& t : mesh.faces())
    for (int k = 0; k < 3; ++k) directed[dkey(t[k], t[(k + 1) % 3])] = true;
  for (const Face& t : mesh.faces())
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (!directed.count(dkey(b, a))) next[a] = b;
    }
  if (next.empty()) throw Error(ErrorCode::Topology, "mesh has no boundary");
  int start = next.begin()->first;
  for (const auto& [v, n] : next) start = std::min(start, v);
  std::vector<int> loop{start};
  for (int v = next.at(start); v != start; v = next.at(v)) {
    loop.push_back(v);
    if (loop.size() > next.size()) break;
  }
  if (loop.size() != next.size())
    throw Error(ErrorCode::Topology, "mesh has more than one boundary loop");
  return loop;
}

std::vector<int> flipped_faces(std::span<const Face> faces, std::span<const Vec2> positions) {
  std::vector<int> out;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    if (signed_area_2d(positions[t[0]], positions[t[1]], positions[t[2]]) <= 0.0)
      out.push_back(static_cast<int>(f));
  }
  return out;
}

std::vector<int> flipped_faces(const TriMesh& mesh2d) {
  auto pos = mesh2d.positions_2d();
  return flipped_faces(mesh2d.faces(), pos);
}

std::vector<std::vector<int>> vertex_neighbors(const TriMesh& mesh) {
  std::vector<std::vector<int>> nbr(mesh.num_vertices());
  for (const Face& t : mesh.faces())
    for (int k = 0; k < 3; ++k) {
      nbr[t[k]].push_back(t[(k + 1) % 3]);
      nbr[t[k]].push_back(t[(k + 2) % 3]);
    }
  for (auto& n : nbr) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return nbr;
}

std::vector<std::vector<int>> vertex_faces(const TriMesh& mesh) {
  std::vector<std::vector<int>> vf(mesh.num_vertices());
  const auto& faces = mesh.faces();
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int v : faces[f]) vf[v].push_back(static_cast<int>(f));
  return vf;
}

}  // namespace tot
