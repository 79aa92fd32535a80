#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tot/mesh.hpp"

namespace tot {

/// Dirichlet problem for the weighted graph Laplacian
///   (Lf)_i = sum_j w_ij (f_i - f_j) = 0 at every unknown vertex.
struct LaplaceProblem {
  std::size_t num_vertices = 0;
  EdgeWeightMap weights;
  /// Prescribed values, one row per boundary vertex; all rows share a width.
  std::map<int, Eigen::VectorXd> boundary;
  /// Vertices that take part in the solve; empty means all of them.
  std::vector<int> domain;
};

struct LaplaceSolution {
  Eigen::MatrixXd values;  // num_vertices x dim; rows outside the domain are zero
  double relative_residual = 0.0;
  int iterations = 0;
};

/// CG with Jacobi preconditioning (tolerance 1e-12, cap 10|V|), falling back
/// to a sparse LU factorisation when CG does not reach the residual bound.
LaplaceSolution solve_laplace(const LaplaceProblem& problem);

enum class WeightMode { Cotangent, ClampedCotangent, Uniform };

/// Uniform weights on every mesh edge.
EdgeWeightMap uniform_weights(const TriMesh& mesh);
EdgeWeightMap clamp_weights(const EdgeWeightMap& w, double floor_value);
EdgeWeightMap make_weights(const TriMesh& mesh, WeightMode mode);

/// Boundary loop onto the unit circle by chord length, interior harmonic.
/// Throws ErrorCode::Flipped when the result has inverted faces.
TriMesh harmonic_map_disk(const TriMesh& mesh3d, WeightMode mode = WeightMode::Cotangent);

/// The four boundary arcs between the corners go to the sides of [-1,1]^2
/// (corner 0 at (-1,-1), counter-clockwise).
TriMesh harmonic_map_rect(const TriMesh& mesh3d, const std::array<int, 4>& corners,
                          WeightMode mode = WeightMode::Cotangent);

/// Four boundary vertices splitting the loop into quarters of equal chord
/// length, starting at the lowest-index boundary vertex.
std::array<int, 4> default_corners(const TriMesh& mesh);

/// max_i |(Lf)_i| over free vertices, divided by the value scale of f.
double laplace_residual(const LaplaceProblem& problem, const Eigen::MatrixXd& values);

}  // namespace tot
