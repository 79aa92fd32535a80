#include "tot/sdot.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "tot/error.hpp"

namespace tot {

const char* to_string(MeasureStrategy s) {
  switch (s) {
    case MeasureStrategy::Area: return "area";
    case MeasureStrategy::Uniform: return "uniform";
    case MeasureStrategy::Roi: return "roi";
    case MeasureStrategy::Image: return "image";
  }
  return "unknown";
}

MeasureStrategy parse_measure_strategy(const std::string& name) {
  if (name == "area") return MeasureStrategy::Area;
  if (name == "uniform") return MeasureStrategy::Uniform;
  if (name == "roi") return MeasureStrategy::Roi;
  if (name == "image") return MeasureStrategy::Image;
  throw Error(ErrorCode::Config, "unknown measure strategy '" + name + "'");
}

std::vector<double> init_heights(std::span<const Vec2> sites) {
  std::vector<double> h(sites.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    h[i] = 0.5 * (1.0 - sites[i].squaredNorm());
    mean += h[i];
  }
  if (!h.empty()) mean /= static_cast<double>(h.size());
  for (double& v : h) v -= mean;
  return h;
}

std::vector<double> measures_from_diagram(const PowerDiagram& pd, const Rect& omega) {
  std::vector<double> w(pd.size());
  const double total = omega.area();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = pd.areas[i] / total;
  return w;
}

std::vector<double> measures_from_diagram(const PowerDiagram& pd) {
  return measures_from_diagram(pd, pd.omega);
}

Eigen::SparseMatrix<double> hessian(const PowerDiagram& pd) {
  const auto n = static_cast<Eigen::Index>(pd.size());
  const double density = 1.0 / pd.omega.area();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * pd.adjacency.size());
  std::vector<double> diag(n, 0.0);
  for (const DualEdge& e : pd.adjacency) {
    double v = e.length * density / (pd.sites[e.i] - pd.sites[e.j]).norm();
    trip.emplace_back(e.i, e.j, -v);
    trip.emplace_back(e.j, e.i, -v);
    diag[e.i] += v;
    diag[e.j] += v;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (diag[i] != 0.0) trip.emplace_back(i, i, diag[i]);
  Eigen::SparseMatrix<double> H(n, n);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

namespace {

Eigen::VectorXd gradient(const PowerDiagram& pd, std::span<const double> nu) {
  std::vector<double> w = measures_from_diagram(pd);
  Eigen::VectorXd g(static_cast<Eigen::Index>(nu.size()));
  for (std::size_t i = 0; i < nu.size(); ++i) g[static_cast<Eigen::Index>(i)] = nu[i] - w[i];
  return g;
}

void remove_mean(Eigen::VectorXd& v) {
  if (v.size() > 0) v.array() -= v.mean();
}

}  // namespace

BrenierState make_state(std::span<const double> heights, const PowerDiagram& pd,
                        std::span<const double> nu) {
  if (heights.size() != pd.size() || nu.size() != pd.size())
    throw Error(ErrorCode::InvalidArgument, "state size mismatch");
  BrenierState s;
  s.h = Eigen::Map<const Eigen::VectorXd>(heights.data(), static_cast<Eigen::Index>(heights.size()));
  s.grad = gradient(pd, nu);
  s.grad_norm = s.grad.norm();
  s.d = Eigen::VectorXd::Zero(s.h.size());
  return s;
}

namespace {

struct LineSearch {
  Eigen::VectorXd h;
  Eigen::VectorXd grad;
  double norm = 0.0;
  double lambda = 0.0;
  PowerDiagram diagram;
  int trials = 0;
  bool decreased = false;
};

LineSearch line_search(const BrenierState& state, const PowerDiagram& pd, std::span<const double> nu,
                       const Eigen::VectorXd& d, double lambda0) {
  const double lambda_min = 1e-10;
  const Eigen::Index n = state.h.size();
  LineSearch best;
  std::vector<double> trial(static_cast<std::size_t>(n));
  for (double lambda = lambda0; lambda >= lambda_min; lambda *= 0.5) {
    Eigen::VectorXd h = state.h + lambda * d;
    remove_mean(h);
    for (Eigen::Index i = 0; i < n; ++i) trial[i] = h[i];
    PowerDiagram trial_pd = power_diagram(pd.sites, trial, pd.omega);
    Eigen::VectorXd g = gradient(trial_pd, nu);
    double norm = g.norm();
    ++best.trials;
    if (best.trials == 1 || norm < best.norm) {
      best.h = h;
      best.grad = g;
      best.norm = norm;
      best.lambda = lambda;
      best.diagram = std::move(trial_pd);
    }
    if (norm < state.grad_norm) {
      best.decreased = true;
      break;
    }
  }
  return best;
}

Eigen::VectorXd solve_direction(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& rhs) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  ldlt.compute(A);
  if (ldlt.info() != Eigen::Success)
    throw Error(ErrorCode::SolverFailure, "Newton system factorisation failed");
  Eigen::VectorXd d = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !d.allFinite())
    throw Error(ErrorCode::SolverFailure, "Newton system solve failed");
  remove_mean(d);
  return d;
}

Eigen::SparseMatrix<double> plus_diagonal(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& add) {
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < add.size(); ++i) t.emplace_back(i, i, add[i]);
  Eigen::SparseMatrix<double> D(H.rows(), H.cols());
  D.setFromTriplets(t.begin(), t.end());
  return H + D;
}

void remove_component_means(const PowerDiagram& pd, Eigen::VectorXd& v) {
  const std::size_t n = pd.size();
  std::vector<std::vector<int>> adj(n);
  for (const DualEdge& e : pd.adjacency) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<int> comp(n, -1);
  std::vector<int> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0 || pd.cells[s].empty()) continue;
    std::vector<int> members;
    comp[s] = static_cast<int>(s);
    stack.push_back(static_cast<int>(s));
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      members.push_back(i);
      for (int j : adj[i])
        if (comp[j] < 0) {
          comp[j] = static_cast<int>(s);
          stack.push_back(j);
        }
    }
    double mean = 0.0;
    for (int i : members) mean += v[i];
    mean /= static_cast<double>(members.size());
    for (int i : members) v[i] -= mean;
  }
}

// Height increase after which each empty cell touches the domain again:
// the smallest gap between the upper envelope and its plane, attained at a
// vertex of some non-empty cell. Zero for non-empty cells.
Eigen::VectorXd reappearance_gap(const PowerDiagram& pd) {
  const std::size_t n = pd.size();
  Eigen::VectorXd gap = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!pd.cells[i].empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (pd.cells[j].empty()) continue;
      Vec2 dp = pd.sites[j] - pd.sites[i];
      double dh = pd.heights[j] - pd.heights[i];
      for (const Vec2& v : pd.cells[j]) best = std::min(best, v.dot(dp) + dh);
    }
    if (std::isfinite(best) && best > 0.0) gap[static_cast<Eigen::Index>(i)] = best;
  }
  return gap;
}

}  // namespace

NewtonStep newton_step(const BrenierState& state, const PowerDiagram& pd,
                       std::span<const double> nu, double lambda0) {
  const Eigen::Index n = state.h.size();
  Eigen::SparseMatrix<double> H = hessian(pd);

  // Cells without neighbours (empty cells) have a zero row; give them the
  // mean diagonal so their heights move by a typical cell's response.
  double trace = 0.0;
  int positive = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = H.coeff(i, i);
    if (v > 0.0) { trace += v; ++positive; }
  }
  double mean_diag = positive > 0 ? trace / positive : 1.0;
  double reg = 1e-12 * (positive > 0 ? trace / static_cast<double>(n) : 1.0);
  Eigen::VectorXd fill(n), plain(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    fill[i] = reg + (H.coeff(i, i) > 0.0 ? 0.0 : mean_diag);
    plain[i] = reg;
  }

  Eigen::VectorXd rhs = state.grad;
  remove_mean(rhs);
  // Each connected group of cells only sees relative heights, so its part of
  // the right-hand side must sum to zero; the missing mass belongs to the
  // empty cells.
  Eigen::VectorXd local = state.grad;
  remove_component_means(pd, local);
  Eigen::VectorXd d = solve_direction(plus_diagonal(H, fill), local);
  Eigen::VectorXd gap = reappearance_gap(pd);
  if (gap.any()) {
    d += gap;
    remove_mean(d);
  }
  LineSearch best = line_search(state, pd, nu, d, lambda0);
  int trials = best.trials;

  if (!best.decreased) {
    // Regularised system alone: empty cells get very long steps, rescaled to
    // the height range of the domain and searched the same way.
    Eigen::VectorXd e = solve_direction(plus_diagonal(H, plain), rhs);
    double top = e.cwiseAbs().maxCoeff();
    if (top > 0.0) {
      double scale = pd.omega.extent() * pd.omega.extent();
      e *= scale / top;
      LineSearch second = line_search(state, pd, nu, e, lambda0);
      trials += second.trials;
      if (second.norm < best.norm) {
        best = std::move(second);
        d = e;
      }
    }
  }

  NewtonStep out;
  out.trials = trials;
  out.state = state;
  out.state.h = best.h;
  out.state.grad = best.grad;
  out.state.grad_norm = best.norm;
  out.state.lambda = best.lambda;
  out.state.stalled = !best.decreased;
  out.diagram = std::move(best.diagram);
  out.state.d = d;
  out.state.iter = state.iter + 1;
  out.state.history.push_back(out.state.grad_norm);
  for (Eigen::Index i = 0; i < n; ++i) out.diagram.heights[i] = out.state.h[i];
  return out;
}

namespace {

IterationRecord record(const BrenierState& s, const PowerDiagram& pd) {
  IterationRecord r;
  r.iter = s.iter;
  r.grad_norm = s.grad_norm;
  r.lambda = s.lambda;
  r.empty_cells = pd.empty_cell_count();
  r.max_abs_diff = s.grad.size() ? s.grad.cwiseAbs().maxCoeff() : 0.0;
  return r;
}

}  // namespace

TransportResult solve_relaxed_ot(const TriMesh& m0, const MeasureSpec& measure, const Rect& omega,
                                 const SolverOptions& options, const IterationObserver& observer) {
  if (m0.dim() != 2) throw Error(ErrorCode::InvalidArgument, "transport needs a planar mesh");
  const std::size_t n = m0.num_vertices();
  if (measure.nu.size() != n) throw Error(ErrorCode::InvalidArgument, "measure size mismatch");
  double sum = 0.0;
  for (double v : measure.nu) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "measure must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "measure must sum to 1");
  if (!(options.eps_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_tol must be positive");

  TransportResult res;
  res.sites = m0.positions_2d();
  res.nu = measure.nu;
  std::vector<double> h = init_heights(res.sites);
  PowerDiagram pd = power_diagram(res.sites, h, omega);
  BrenierState state = make_state(h, pd, measure.nu);
  state.lambda = 0.0;
  res.log.push_back(record(state, pd));

  std::vector<Vec2> positions = res.sites;
  auto update_positions = [&](const PowerDiagram& diagram) {
    for (std::size_t i = 0; i < n; ++i)
      if (diagram.centroids[i]) positions[i] = *diagram.centroids[i];
  };
  update_positions(pd);

  int consecutive_stalls = 0;
  while (state.grad_norm > options.eps_tol && state.iter < options.max_iter) {
    NewtonStep step = newton_step(state, pd, measure.nu, options.lambda0);
    state = std::move(step.state);
    pd = std::move(step.diagram);
    res.log.push_back(record(state, pd));
    update_positions(pd);
    if (observer) {
      std::vector<double> w = measures_from_diagram(pd);
      observer(IterationView{state.iter, state, pd, w}, positions);
    }
    if (state.stalled) {
      if (++consecutive_stalls >= 3) break;
    } else {
      consecutive_stalls = 0;
    }
  }
  res.converged = state.grad_norm <= options.eps_tol;
  res.stalled = !res.converged && consecutive_stalls > 0;
  res.omega = measures_from_diagram(pd);
  res.mhat = m0.with_positions(positions);
  res.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.assignment[i] = static_cast<int>(i);
  res.diagram = std::move(pd);
  res.state = std::move(state);
  return res;
}

void write_convergence_csv(const std::vector<IterationRecord>& log, std::ostream& out) {
  out << "iter,grad_norm,lambda,empty_cells,max_abs_diff\n";
  out << std::setprecision(12);
  for (const IterationRecord& r : log)
    out << r.iter << ',' << r.grad_norm << ',' << r.lambda << ',' << r.empty_cells << ','
        << r.max_abs_diff << '\n';
}

}  // namespace tot
