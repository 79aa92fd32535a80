#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tot/measures.hpp"
#include "tot/quasiconformal.hpp"
#include "tot/sdot.hpp"

namespace tot {

enum class DomainShape { Disk, Square };

const char* to_string(DomainShape d);
DomainShape parse_domain_shape(const std::string& name);

struct MeasureConfig {
  MeasureStrategy strategy = MeasureStrategy::Area;
  double k = 1.0;
  double delta = 0.1;
  RoiSet rois;
};

struct TotConfig {
  double eps_tol = 1e-5;
  double eps_distortion = 0.7;
  int gamma = 2;
  double lambda0 = 1.0;
  double omega_scale = 1.2;
  int max_iter = 1000;
  DomainShape domain = DomainShape::Disk;
  bool clamp_weights = false;  // floor negative cotangent weights in the parameterization
  MeasureConfig measure;

  /// Throws ErrorCode::Config on out-of-range values.
  void validate() const;
};

/// Planar parameter mesh M0: the input itself when it is already planar,
/// otherwise a harmonic map onto the unit disk or [-1,1]^2. Falls back to
/// uniform weights when cotangent weights flip faces.
TriMesh parameterize(const TriMesh& input, DomainShape domain, bool clamp_weights = false);

/// Target measure on M0; the area strategy uses the areas of the input surface.
MeasureSpec build_measure(const TriMesh& input, const TriMesh& m0, const MeasureConfig& cfg);

Rect transport_domain(const TriMesh& m0, double omega_scale);

struct DensityDiagnostics {
  std::vector<double> rho;  // |omega_i - nu_i|
  std::vector<double> psi;  // nu_i / omega_i, NaN for empty cells
  double rho_max = 0.0;
  double rho_mean = 0.0;
  double psi_min = 0.0;
  double psi_max = 0.0;
  std::size_t undefined_psi = 0;
  std::vector<std::size_t> rho_histogram;  // equal bins over [0, rho_max]
};

DensityDiagnostics diagnostics(std::span<const double> nu, std::span<const double> omega,
                               std::size_t bins = 10);

/// Per-vertex CSV rows: vertex,nu,omega,rho,psi (psi empty when undefined).
void write_density_csv(std::span<const double> nu, std::span<const double> omega,
                       const DensityDiagnostics& d, std::ostream& out);

struct TotResult {
  TriMesh m0;          // parameter mesh (the vertex map phi)
  TriMesh mhat_raw;    // vertices at the cell centroids
  TriMesh mhat;        // after correction
  MeasureSpec measure;
  TransportResult transport;
  BeltramiField mu_raw;    // of M0 -> mhat_raw
  BeltramiField mu_final;  // of M0 -> mhat
  std::optional<QcResult> qc;
  DensityDiagnostics density;
  std::size_t flips_raw = 0;
  std::size_t flips_final = 0;
  std::vector<std::string> warnings;

  bool converged() const { return transport.converged; }
  bool stalled() const { return transport.stalled; }
  bool skipped_patches() const { return qc && qc->skipped_any(); }
};

/// Correction step shared by the single-shot and temporal runs: QC applied
/// when the largest |mu| of M0 -> positions exceeds eps.
struct CorrectedFrame {
  TriMesh mesh;
  BeltramiField mu_raw;
  BeltramiField mu_final;
  std::optional<QcResult> qc;
  std::size_t flips_raw = 0;
  std::size_t flips_final = 0;
};
CorrectedFrame correct_frame(const TriMesh& m0, std::span<const Vec2> positions, const TotConfig& cfg);

TotResult t_ot(const TriMesh& input, const TotConfig& cfg);

struct TemporalFrame {
  int iter = 0;
  double t = 0.0;
  TriMesh mesh;
  double grad_norm = 0.0;
  double rho_max = 0.0;
  std::size_t flips = 0;
  std::size_t flips_raw = 0;
  bool corrected = false;
  bool unresolved = false;
  std::vector<double> psi;
};

struct TemporalSequence {
  std::vector<TemporalFrame> frames;  // frame 0 is M0, then one per Newton iteration
  TotResult result;                   // same as t_ot for this input and config

  /// Vertex polylines through all frames.
  std::vector<std::vector<Vec2>> trajectories() const;
};

TemporalSequence tt_ot(const TriMesh& input, const TotConfig& cfg);

}  // namespace tot
