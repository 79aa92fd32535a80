#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "tot/geometry.hpp"
#include "tot/mesh.hpp"

namespace tot {

enum class MeasureStrategy { Area, Uniform, Roi, Image };

const char* to_string(MeasureStrategy s);
MeasureStrategy parse_measure_strategy(const std::string& name);

/// Target measure nu_i on the mesh vertices, normalised to sum 1.
struct MeasureSpec {
  std::vector<double> nu;
  MeasureStrategy strategy = MeasureStrategy::Uniform;
  std::map<std::string, double> parameters;
};

/// h_i = (1 - |p_i|^2) / 2, shifted to zero mean. Its power diagram is the
/// Voronoi diagram of the sites.
std::vector<double> init_heights(std::span<const Vec2> sites);

/// omega_i = area(cell_i) / area(omega).
std::vector<double> measures_from_diagram(const PowerDiagram& pd, const Rect& omega);
std::vector<double> measures_from_diagram(const PowerDiagram& pd);

/// d omega / d h: off-diagonal -(L_ij / |omega|) / |p_i - p_j| for adjacent
/// cells, diagonal the negated row sum.
Eigen::SparseMatrix<double> hessian(const PowerDiagram& pd);

struct BrenierState {
  Eigen::VectorXd h;
  Eigen::VectorXd grad;  // nu - omega(h)
  Eigen::VectorXd d;     // last Newton direction
  double lambda = 1.0;   // last accepted damping factor
  double grad_norm = 0.0;
  int iter = 0;
  bool stalled = false;
  std::vector<double> history;  // |grad E| after every accepted step
};

BrenierState make_state(std::span<const double> heights, const PowerDiagram& pd,
                        std::span<const double> nu);

struct NewtonStep {
  BrenierState state;
  PowerDiagram diagram;  // diagram of the accepted heights
  int trials = 0;
};

/// One damped Newton update on the heights. The direction solves
/// (Hess + eps I) d = grad E on zero-mean vectors; lambda starts at lambda0
/// and halves until |grad E| decreases or lambda < 1e-10 (stall: the best
/// trial is kept and state.stalled is set).
NewtonStep newton_step(const BrenierState& state, const PowerDiagram& pd,
                       std::span<const double> nu, double lambda0);

struct IterationRecord {
  int iter = 0;
  double grad_norm = 0.0;
  double lambda = 0.0;
  std::size_t empty_cells = 0;
  double max_abs_diff = 0.0;  // max_i |nu_i - omega_i|
};

struct SolverOptions {
  double eps_tol = 1e-5;
  double lambda0 = 1.0;
  int max_iter = 1000;
};

struct IterationView {
  int iter;
  const BrenierState& state;
  const PowerDiagram& diagram;
  std::span<const double> omega;
};

/// Invoked after every accepted step with the centroid positions, which the
/// observer may overwrite (the temporal pipeline writes corrected positions).
using IterationObserver = std::function<void(const IterationView&, std::vector<Vec2>& positions)>;

struct TransportResult {
  TriMesh mhat;                  // M0 connectivity, vertices at cell centroids
  std::vector<int> assignment;   // mhat vertex i corresponds to site i
  std::vector<Vec2> sites;
  std::vector<double> nu;
  std::vector<double> omega;
  PowerDiagram diagram;
  BrenierState state;
  std::vector<IterationRecord> log;
  bool converged = false;
  bool stalled = false;
};

TransportResult solve_relaxed_ot(const TriMesh& m0, const MeasureSpec& nu, const Rect& omega,
                                 const SolverOptions& options = {},
                                 const IterationObserver& observer = {});

/// CSV rows: iter,grad_norm,lambda,empty_cells,max_abs_diff.
void write_convergence_csv(const std::vector<IterationRecord>& log, std::ostream& out);

}  // namespace tot
