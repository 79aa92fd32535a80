#include "tot/harmonic.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tot/error.hpp"

namespace tot {

namespace {

struct Assembly {
  std::vector<int> unknown_index;  // vertex -> row, -1 when not an unknown
  std::vector<int> unknowns;
  std::vector<char> in_domain;
};

Assembly classify(const LaplaceProblem& p) {
  Assembly a;
  const std::size_t n = p.num_vertices;
  a.in_domain.assign(n, p.domain.empty() ? 1 : 0);
  for (int v : p.domain) {
    if (v < 0 || static_cast<std::size_t>(v) >= n)
      throw Error(ErrorCode::InvalidArgument, "domain vertex out of range");
    a.in_domain[v] = 1;
  }
  a.unknown_index.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (!a.in_domain[v] || p.boundary.count(static_cast<int>(v))) continue;
    a.unknown_index[v] = static_cast<int>(a.unknowns.size());
    a.unknowns.push_back(static_cast<int>(v));
  }
  return a;
}

}  // namespace

double laplace_residual(const LaplaceProblem& problem, const Eigen::MatrixXd& values) {
  Assembly a = classify(problem);
  const std::size_t n = problem.num_vertices;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), values.cols());
  std::vector<double> row_weight(n, 0.0);
  for (const auto& [key, w] : problem.weights) {
    auto [i, j] = EdgeMap::unpack(key);
    if (!a.in_domain[i] || !a.in_domain[j]) continue;
    Eigen::RowVectorXd diff = values.row(i) - values.row(j);
    lap.row(i) += w * diff;
    lap.row(j) -= w * diff;
    row_weight[i] += std::abs(w);
    row_weight[j] += std::abs(w);
  }
  double worst = 0.0, wscale = 0.0;
  for (int v : a.unknowns) {
    worst = std::max(worst, lap.row(v).cwiseAbs().maxCoeff());
    wscale = std::max(wscale, row_weight[v]);
  }
  double fscale = 0.0;
  for (std::size_t v = 0; v < n; ++v)
    if (a.in_domain[v]) fscale = std::max(fscale, values.row(static_cast<Eigen::Index>(v)).cwiseAbs().maxCoeff());
  if (worst == 0.0) return 0.0;
  return worst / (std::max(fscale, 1e-300) * std::max(wscale, 1e-300));
}

LaplaceSolution solve_laplace(const LaplaceProblem& problem) {
  if (problem.boundary.empty())
    throw Error(ErrorCode::InvalidArgument, "Laplace problem needs boundary values");
  const Eigen::Index dim = problem.boundary.begin()->second.size();
  for (const auto& [v, val] : problem.boundary) {
    if (v < 0 || static_cast<std::size_t>(v) >= problem.num_vertices)
      throw Error(ErrorCode::InvalidArgument, "boundary vertex out of range");
    if (val.size() != dim) throw Error(ErrorCode::InvalidArgument, "boundary value width mismatch");
  }
  Assembly a = classify(problem);
  const std::size_t n = problem.num_vertices;

  LaplaceSolution sol;
  sol.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), dim);
  for (const auto& [v, val] : problem.boundary) sol.values.row(v) = val.transpose();
  const Eigen::Index m = static_cast<Eigen::Index>(a.unknowns.size());
  if (m == 0) return sol;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(problem.weights.size() * 4);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, dim);
  std::vector<int> degree(m, 0);
  auto couple = [&](int i, int j, double w) {
    int ri = a.unknown_index[i];
    if (ri < 0) return;
    ++degree[ri];
    trip.emplace_back(ri, ri, w);
    int rj = a.unknown_index[j];
    if (rj >= 0) trip.emplace_back(ri, rj, -w);
    else rhs.row(ri) += w * sol.values.row(j);
  };
  for (const auto& [key, w] : problem.weights) {
    auto [i, j] = EdgeMap::unpack(key);
    if (!a.in_domain[i] || !a.in_domain[j]) continue;
    couple(i, j, w);
    couple(j, i, w);
  }
  for (Eigen::Index r = 0; r < m; ++r)
    if (degree[r] == 0)
      throw Error(ErrorCode::InvalidArgument,
                  "unknown vertex " + std::to_string(a.unknowns[r]) + " has no neighbours");

  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(static_cast<Eigen::Index>(10 * n));
  cg.compute(A);
  Eigen::MatrixXd x(m, dim);
  bool ok = cg.info() == Eigen::Success;
  for (Eigen::Index c = 0; c < dim && ok; ++c) {
    x.col(c) = cg.solve(rhs.col(c));
    ok = cg.info() == Eigen::Success;
    sol.iterations = std::max(sol.iterations, static_cast<int>(cg.iterations()));
  }
  auto rel = [&](const Eigen::MatrixXd& y) {
    double bn = rhs.norm();
    double r = (A * y - rhs).norm();
    return bn > 0.0 ? r / bn : r;
  };
  if (ok) sol.relative_residual = rel(x);
  if (!ok || !std::isfinite(sol.relative_residual) || sol.relative_residual > 1e-10) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw Error(ErrorCode::SolverFailure, "Laplace system is singular");
    x = lu.solve(rhs);
    sol.relative_residual = rel(x);
    if (lu.info() != Eigen::Success || !std::isfinite(sol.relative_residual) ||
        sol.relative_residual > 1e-10)
      throw Error(ErrorCode::SolverFailure, "Laplace solve did not converge");
  }
  for (Eigen::Index r = 0; r < m; ++r) sol.values.row(a.unknowns[r]) = x.row(r);
  return sol;
}

EdgeWeightMap uniform_weights(const TriMesh& mesh) {
  EdgeWeightMap w;
  for (const Face& t : mesh.faces())
    for (int k = 0; k < 3; ++k) w(t[k], t[(k + 1) % 3]) = 1.0;
  return w;
}

EdgeWeightMap clamp_weights(const EdgeWeightMap& w, double floor_value) {
  EdgeWeightMap out;
  for (const auto& [key, value] : w) {
    auto [i, j] = EdgeMap::unpack(key);
    out(i, j) = std::max(value, floor_value);
  }
  return out;
}

EdgeWeightMap make_weights(const TriMesh& mesh, WeightMode mode) {
  switch (mode) {
    case WeightMode::Uniform: return uniform_weights(mesh);
    case WeightMode::ClampedCotangent: {
      EdgeWeightMap w = cotangent_weights(mesh);
      double mean = 0.0;
      for (const auto& kv : w) mean += std::abs(kv.second);
      mean /= std::max<std::size_t>(w.size(), 1);
      return clamp_weights(w, 1e-6 * mean);
    }
    case WeightMode::Cotangent: break;
  }
  return cotangent_weights(mesh);
}

namespace {

std::vector<double> cumulative_chord(const TriMesh& mesh, const std::vector<int>& loop) {
  std::vector<double> s(loop.size() + 1, 0.0);
  for (std::size_t k = 0; k < loop.size(); ++k)
    s[k + 1] = s[k] + (mesh.vertex(loop[(k + 1) % loop.size()]) - mesh.vertex(loop[k])).norm();
  return s;
}

TriMesh solve_with_boundary(const TriMesh& mesh, WeightMode mode,
                            std::map<int, Eigen::VectorXd> boundary) {
  LaplaceProblem p;
  p.num_vertices = mesh.num_vertices();
  p.weights = make_weights(mesh, mode);
  p.boundary = std::move(boundary);
  LaplaceSolution sol = solve_laplace(p);
  std::vector<Vec2> pos(mesh.num_vertices());
  for (std::size_t i = 0; i < pos.size(); ++i)
    pos[i] = Vec2(sol.values(static_cast<Eigen::Index>(i), 0), sol.values(static_cast<Eigen::Index>(i), 1));
  // Pin boundary rows to the exact prescribed doubles.
  for (const auto& [v, val] : p.boundary) pos[v] = Vec2(val(0), val(1));
  TriMesh out = mesh.with_positions(pos);
  auto flipped = flipped_faces(out);
  if (!flipped.empty())
    throw Error(ErrorCode::Flipped,
                "harmonic map has " + std::to_string(flipped.size()) + " flipped faces");
  return out;
}

}  // namespace

TriMesh harmonic_map_disk(const TriMesh& mesh3d, WeightMode mode) {
  std::vector<int> loop = boundary_loop(mesh3d);
  std::vector<double> s = cumulative_chord(mesh3d, loop);
  double total = s.back();
  if (!(total > 0.0)) throw Error(ErrorCode::Degenerate, "boundary loop has zero length");
  std::map<int, Eigen::VectorXd> boundary;
  for (std::size_t k = 0; k < loop.size(); ++k) {
    double theta = 2.0 * std::numbers::pi * s[k] / total;
    Eigen::VectorXd v(2);
    v << std::cos(theta), std::sin(theta);
    boundary[loop[k]] = v;
  }
  return solve_with_boundary(mesh3d, mode, std::move(boundary));
}

TriMesh harmonic_map_rect(const TriMesh& mesh3d, const std::array<int, 4>& corners,
                          WeightMode mode) {
  std::vector<int> loop = boundary_loop(mesh3d);
  std::array<std::size_t, 4> pos{};
  for (int c = 0; c < 4; ++c) {
    auto it = std::find(loop.begin(), loop.end(), corners[c]);
    if (it == loop.end())
      throw Error(ErrorCode::InvalidArgument, "corner " + std::to_string(corners[c]) + " is not on the boundary");
    pos[c] = static_cast<std::size_t>(it - loop.begin());
  }
  // Cyclic order: offsets from corner 0 must strictly increase.
  const std::size_t n = loop.size();
  std::array<std::size_t, 4> off{};
  for (int c = 0; c < 4; ++c) off[c] = (pos[c] + n - pos[0]) % n;
  if (!(off[0] == 0 && off[1] > 0 && off[2] > off[1] && off[3] > off[2]))
    throw Error(ErrorCode::InvalidArgument, "corners are not distinct and in cyclic boundary order");

  std::vector<int> rotated(n);
  for (std::size_t k = 0; k < n; ++k) rotated[k] = loop[(pos[0] + k) % n];
  std::vector<double> s = cumulative_chord(mesh3d, rotated);
  const std::array<Vec2, 5> side{Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1), Vec2(-1, -1)};
  std::array<std::size_t, 5> bounds{off[0], off[1], off[2], off[3], n};

  std::map<int, Eigen::VectorXd> boundary;
  for (int c = 0; c < 4; ++c) {
    double s0 = s[bounds[c]], s1 = s[bounds[c + 1]];
    if (!(s1 > s0)) throw Error(ErrorCode::Degenerate, "boundary arc has zero length");
    for (std::size_t k = bounds[c]; k < bounds[c + 1]; ++k) {
      double t = (s[k] - s0) / (s1 - s0);
      Vec2 p = (1.0 - t) * side[c] + t * side[c + 1];
      if (k == bounds[c]) p = side[c];
      Eigen::VectorXd v(2);
      v << p.x(), p.y();
      boundary[rotated[k]] = v;
    }
  }
  return solve_with_boundary(mesh3d, mode, std::move(boundary));
}

std::array<int, 4> default_corners(const TriMesh& mesh) {
  std::vector<int> loop = boundary_loop(mesh);
  if (loop.size() < 4) throw Error(ErrorCode::Topology, "boundary loop has fewer than 4 vertices");
  std::vector<double> s = cumulative_chord(mesh, loop);
  std::array<int, 4> corners{loop[0], -1, -1, -1};
  std::size_t prev = 0;
  for (int c = 1; c < 4; ++c) {
    double target = s.back() * c / 4.0;
    std::size_t best = prev + 1;
    for (std::size_t k = prev + 1; k + (4 - c) <= loop.size(); ++k)
      if (std::abs(s[k] - target) < std::abs(s[best] - target)) best = k;
    corners[c] = loop[best];
    prev = best;
  }
  return corners;
}

}  // namespace tot
