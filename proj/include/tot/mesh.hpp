#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace tot {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/// Indexed triangle mesh of a topological disk.
///
/// Instances are immutable once built. Connectivity is shared between a mesh
/// and every mesh derived from it with with_positions(), so "same face list"
/// can be checked by pointer as well as by value.
class TriMesh {
 public:
  TriMesh() = default;

  /// Validates indices, manifoldness, consistent orientation, connectedness
  /// and disk topology (exactly one boundary loop). Throws tot::Error.
  static TriMesh create(std::vector<Vec3> vertices, std::vector<Face> faces,
                        int dim, std::optional<std::vector<double>> gray = {});
  static TriMesh create_2d(std::span<const Vec2> vertices,
                           std::vector<Face> faces,
                           std::optional<std::vector<double>> gray = {});

  int dim() const { return dim_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_faces() const { return faces_ ? faces_->size() : 0; }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const Vec3& vertex(int i) const { return vertices_[i]; }
  Vec2 xy(int i) const { return vertices_[i].head<2>(); }
  std::vector<Vec2> positions_2d() const;

  const std::vector<Face>& faces() const { return *faces_; }
  const std::shared_ptr<const std::vector<Face>>& shared_faces() const {
    return faces_;
  }

  const std::optional<std::vector<double>>& gray() const { return gray_; }
  bool has_gray() const { return gray_.has_value(); }

  const std::vector<bool>& boundary_flags() const { return *boundary_; }
  bool is_boundary(int i) const { return (*boundary_)[i]; }

  /// Planar copy with new vertex positions; connectivity and gray are shared.
  TriMesh with_positions(std::span<const Vec2> positions) const;
  TriMesh with_gray(std::vector<double> gray) const;

 private:
  std::vector<Vec3> vertices_;
  std::shared_ptr<const std::vector<Face>> faces_;
  std::shared_ptr<const std::vector<bool>> boundary_;
  std::optional<std::vector<double>> gray_;
  int dim_ = 3;
};

/// Unordered vertex pair -> value, defined on mesh edges.
class EdgeMap {
 public:
  static std::uint64_t key(int i, int j) {
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint32_t>(j);
  }
  static std::pair<int, int> unpack(std::uint64_t k) {
    return {static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu)};
  }

  double& operator()(int i, int j) { return values_[key(i, j)]; }
  double at(int i, int j) const { return values_.at(key(i, j)); }
  bool contains(int i, int j) const { return values_.count(key(i, j)) != 0; }
  std::size_t size() const { return values_.size(); }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

 private:
  std::unordered_map<std::uint64_t, double> values_;
};

using EdgeWeightMap = EdgeMap;
using EdgeLengthMap = EdgeMap;

enum class MeshFormat { Obj, Off };

TriMesh load_mesh(const std::filesystem::path& path,
                  std::optional<MeshFormat> format = {});
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               std::optional<MeshFormat> format = {});

double face_area(const TriMesh& mesh, int f);
/// Signed area of a planar face (positive when counter-clockwise).
double signed_area_2d(const Vec2& a, const Vec2& b, const Vec2& c);
double total_area(const TriMesh& mesh);

/// One third of the area of the faces incident to vertex i.
double vertex_area(const TriMesh& mesh, int i);
std::vector<double> vertex_areas(const TriMesh& mesh);

/// w_ij = cot(alpha) + cot(beta) on interior edges, cot(alpha) on boundary
/// edges. Angles come from edge lengths (the override when supplied).
EdgeWeightMap cotangent_weights(const TriMesh& mesh,
                                const EdgeLengthMap* edge_lengths = nullptr);
/// Same rule over a face subset with every edge length supplied.
EdgeWeightMap cotangent_weights(std::span<const Face> faces, const EdgeLengthMap& edge_lengths);

/// Counter-clockwise boundary loop starting at the lowest boundary index.
std::vector<int> boundary_loop(const TriMesh& mesh);

/// Faces of a planar mesh with signed area <= 0.
std::vector<int> flipped_faces(const TriMesh& mesh2d);
std::vector<int> flipped_faces(std::span<const Face> faces,
                               std::span<const Vec2> positions);

/// Sorted one-ring neighbours per vertex.
std::vector<std::vector<int>> vertex_neighbors(const TriMesh& mesh);
std::vector<std::vector<int>> vertex_faces(const TriMesh& mesh);

bool is_degenerate_triangle(double l0, double l1, double l2);

}  // namespace tot
