#include "tot/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "tot/error.hpp"
#include "tot/harmonic.hpp"

namespace tot {

const char* to_string(DomainShape d) { return d == DomainShape::Disk ? "disk" : "square"; }

DomainShape parse_domain_shape(const std::string& name) {
  if (name == "disk") return DomainShape::Disk;
  if (name == "square") return DomainShape::Square;
  throw Error(ErrorCode::Config, "unknown domain '" + name + "' (expected disk or square)");
}

void TotConfig::validate() const {
  if (!(eps_tol > 0.0)) throw Error(ErrorCode::Config, "eps_tol must be positive");
  if (!(eps_distortion > 0.0 && eps_distortion <= 1.0))
    throw Error(ErrorCode::Config, "eps_distortion must lie in (0, 1]");
  if (gamma < 1) throw Error(ErrorCode::Config, "gamma must be at least 1");
  if (!(lambda0 > 0.0 && lambda0 <= 1.0)) throw Error(ErrorCode::Config, "lambda0 must lie in (0, 1]");
  if (!(omega_scale > 1.0)) throw Error(ErrorCode::Config, "omega_scale must exceed 1");
  if (max_iter < 1) throw Error(ErrorCode::Config, "max_iter must be positive");
  if (!(measure.k > 0.0)) throw Error(ErrorCode::Config, "k must be positive");
  if (!(measure.delta > 0.0)) throw Error(ErrorCode::Config, "delta must be positive");
  for (const RoiCircle& c : measure.rois.circles)
    if (!(c.r > 0.0) || !(c.k >= 0.0)) throw Error(ErrorCode::Config, "invalid ROI circle");
  for (const RoiBox& b : measure.rois.boxes)
    if (!(b.xmax > b.xmin && b.ymax > b.ymin) || !(b.k >= 0.0))
      throw Error(ErrorCode::Config, "invalid ROI box");
}

TriMesh parameterize(const TriMesh& input, DomainShape domain, bool clamp_weights) {
  if (input.dim() == 2) return input;
  auto run = [&](WeightMode mode) {
    return domain == DomainShape::Disk ? harmonic_map_disk(input, mode)
                                       : harmonic_map_rect(input, default_corners(input), mode);
  };
  try {
    return run(clamp_weights ? WeightMode::ClampedCotangent : WeightMode::Cotangent);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Flipped && e.code() != ErrorCode::Degenerate) throw;
  }
  return run(WeightMode::Uniform);
}

MeasureSpec build_measure(const TriMesh& input, const TriMesh& m0, const MeasureConfig& cfg) {
  switch (cfg.strategy) {
    case MeasureStrategy::Area:
      return measure_area_preserving(input);
    case MeasureStrategy::Uniform:
      return measure_uniform(m0.num_vertices());
    case MeasureStrategy::Roi:
      return measure_roi(m0, cfg.rois);
    case MeasureStrategy::Image:
      return measure_image(m0, cfg.k, cfg.delta);
  }
  throw Error(ErrorCode::Config, "unknown measure strategy");
}

Rect transport_domain(const TriMesh& m0, double omega_scale) {
  std::vector<Vec2> p = m0.positions_2d();
  return Rect::scaled_bounding_square(p, omega_scale);
}

DensityDiagnostics diagnostics(std::span<const double> nu, std::span<const double> omega,
                               std::size_t bins) {
  if (nu.size() != omega.size()) throw Error(ErrorCode::InvalidArgument, "measure size mismatch");
  DensityDiagnostics d;
  const std::size_t n = nu.size();
  d.rho.resize(n);
  d.psi.resize(n);
  d.psi_min = std::numeric_limits<double>::infinity();
  d.psi_max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d.rho[i] = std::abs(omega[i] - nu[i]);
    d.rho_max = std::max(d.rho_max, d.rho[i]);
    sum += d.rho[i];
    if (omega[i] > 0.0) {
      d.psi[i] = nu[i] / omega[i];
      d.psi_min = std::min(d.psi_min, d.psi[i]);
      d.psi_max = std::max(d.psi_max, d.psi[i]);
    } else {
      d.psi[i] = std::numeric_limits<double>::quiet_NaN();
      ++d.undefined_psi;
    }
  }
  if (d.undefined_psi == n) d.psi_min = d.psi_max = 0.0;
  d.rho_mean = n ? sum / static_cast<double>(n) : 0.0;
  d.rho_histogram.assign(std::max<std::size_t>(bins, 1), 0);
  for (double r : d.rho) {
    std::size_t b = d.rho_max > 0.0
                        ? static_cast<std::size_t>(r / d.rho_max * static_cast<double>(d.rho_histogram.size()))
                        : 0;
    ++d.rho_histogram[std::min(b, d.rho_histogram.size() - 1)];
  }
  return d;
}

void write_density_csv(std::span<const double> nu, std::span<const double> omega,
                       const DensityDiagnostics& d, std::ostream& out) {
  out << "vertex,nu,omega,rho,psi\n" << std::setprecision(12);
  for (std::size_t i = 0; i < nu.size(); ++i) {
    out << i << ',' << nu[i] << ',' << omega[i] << ',' << d.rho[i] << ',';
    if (!std::isnan(d.psi[i])) out << d.psi[i];
    out << '\n';
  }
}

CorrectedFrame correct_frame(const TriMesh& m0, std::span<const Vec2> positions, const TotConfig& cfg) {
  CorrectedFrame f;
  TriMesh raw = m0.with_positions(positions);
  f.mu_raw = beltrami_field(m0, positions);
  f.flips_raw = flipped_faces(raw).size();
  if (f.mu_raw.max_vertex_magnitude() > cfg.eps_distortion || f.flips_raw > 0) {
    QcOptions opt;
    opt.eps = cfg.eps_distortion;
    opt.gamma = cfg.gamma;
    opt.gamma_max = std::max(opt.gamma_max, cfg.gamma);
    f.qc = qc_correct(m0, raw, f.mu_raw, opt);
    f.mesh = f.qc->mesh;
    f.mu_final = f.qc->field;
  } else {
    f.mesh = raw;
    f.mu_final = f.mu_raw;
  }
  f.flips_final = flipped_faces(f.mesh).size();
  return f;
}

namespace {

struct Prepared {
  TriMesh m0;
  MeasureSpec measure;
  Rect omega;
  SolverOptions options;
};

Prepared prepare(const TriMesh& input, const TotConfig& cfg) {
  cfg.validate();
  Prepared p;
  p.m0 = parameterize(input, cfg.domain, cfg.clamp_weights);
  p.measure = build_measure(input, p.m0, cfg.measure);
  p.omega = transport_domain(p.m0, cfg.omega_scale);
  p.options.eps_tol = cfg.eps_tol;
  p.options.lambda0 = cfg.lambda0;
  p.options.max_iter = cfg.max_iter;
  return p;
}

TotResult finish(Prepared p, TransportResult tr, const TotConfig& cfg) {
  TotResult r;
  CorrectedFrame f = correct_frame(p.m0, tr.mhat.positions_2d(), cfg);
  r.m0 = std::move(p.m0);
  r.measure = std::move(p.measure);
  r.mhat_raw = tr.mhat;
  r.mhat = std::move(f.mesh);
  r.mu_raw = std::move(f.mu_raw);
  r.mu_final = std::move(f.mu_final);
  r.qc = std::move(f.qc);
  r.flips_raw = f.flips_raw;
  r.flips_final = f.flips_final;
  r.density = diagnostics(tr.nu, tr.omega);
  if (!tr.converged)
    r.warnings.push_back("transport did not converge: |grad E| = " + std::to_string(tr.state.grad_norm));
  if (tr.stalled) r.warnings.push_back("line search stalled");
  if (r.qc)
    for (const std::string& w : r.qc->warnings) r.warnings.push_back(w);
  if (r.flips_final > 0)
    r.warnings.push_back(std::to_string(r.flips_final) + " flipped faces remain after correction");
  r.transport = std::move(tr);
  return r;
}

}  // namespace

TotResult t_ot(const TriMesh& input, const TotConfig& cfg) {
  Prepared p = prepare(input, cfg);
  TransportResult tr = solve_relaxed_ot(p.m0, p.measure, p.omega, p.options);
  return finish(std::move(p), std::move(tr), cfg);
}

TemporalSequence tt_ot(const TriMesh& input, const TotConfig& cfg) {
  Prepared p = prepare(input, cfg);
  TemporalSequence seq;

  TemporalFrame first;
  first.mesh = p.m0;
  {
    std::vector<double> omega0 = measures_from_diagram(
        power_diagram(p.m0.positions_2d(), init_heights(p.m0.positions_2d()), p.omega));
    DensityDiagnostics d = diagnostics(p.measure.nu, omega0);
    first.rho_max = d.rho_max;
    double g2 = 0.0;
    for (double r : d.rho) g2 += r * r;
    first.grad_norm = std::sqrt(g2);
    first.psi = d.psi;
  }
  first.flips = first.flips_raw = flipped_faces(p.m0).size();
  seq.frames.push_back(std::move(first));

  const TriMesh& m0 = p.m0;
  const std::vector<double>& nu = p.measure.nu;
  auto observer = [&](const IterationView& view, std::vector<Vec2>& positions) {
    CorrectedFrame f = correct_frame(m0, positions, cfg);
    DensityDiagnostics d = diagnostics(nu, view.omega);
    TemporalFrame fr;
    fr.iter = view.iter;
    fr.mesh = std::move(f.mesh);
    fr.grad_norm = view.state.grad_norm;
    fr.rho_max = d.rho_max;
    fr.psi = std::move(d.psi);
    fr.flips = f.flips_final;
    fr.flips_raw = f.flips_raw;
    fr.corrected = f.qc.has_value();
    fr.unresolved = f.qc && f.qc->skipped_any();
    seq.frames.push_back(std::move(fr));
  };
  TransportResult tr = solve_relaxed_ot(p.m0, p.measure, p.omega, p.options, observer);
  int total = tr.state.iter;
  for (TemporalFrame& f : seq.frames)
    f.t = total > 0 ? static_cast<double>(f.iter) / total : 1.0;
  seq.result = finish(std::move(p), std::move(tr), cfg);
  return seq;
}

std::vector<std::vector<Vec2>> TemporalSequence::trajectories() const {
  if (frames.empty()) return {};
  std::vector<std::vector<Vec2>> out(frames.front().mesh.num_vertices());
  for (const TemporalFrame& f : frames)
    for (std::size_t i = 0; i < out.size(); ++i) out[i].push_back(f.mesh.xy(static_cast<int>(i)));
  return out;
}

}  // namespace tot
