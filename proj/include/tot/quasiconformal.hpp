#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tot/mesh.hpp"

namespace tot {

using Complex = std::complex<double>;

/// Beltrami coefficient of the affine map taking src onto dst,
/// mu = f_zbar / f_z. Returns an infinite value when |f_z| vanishes.
Complex face_beltrami(const std::array<Vec2, 3>& src, const std::array<Vec2, 3>& dst);

/// A face or vertex whose coefficient marks a flip or collapse.
inline bool is_sentinel(Complex mu) { return !(std::abs(mu) < 1.0); }

/// Area-weighted average of the incident face coefficients, weighted by the
/// areas of the given mesh; a vertex touching a sentinel face is infinite.
std::vector<Complex> vertex_beltrami(const TriMesh& mesh, std::span<const Complex> per_face);

struct BeltramiField {
  std::vector<Complex> per_face;
  std::vector<Complex> per_vertex;

  double vertex_magnitude(int i) const { return std::abs(per_vertex[i]); }
  double max_vertex_magnitude() const;
};

/// Coefficients of the piecewise-linear map src -> dst (same connectivity).
BeltramiField beltrami_field(const TriMesh& src, std::span<const Vec2> dst);

/// |dz + mu * conj(dz)|.
double auxiliary_metric(Complex dz, Complex mu_edge);

/// Vertices within graph distance gamma of a centre. The boundary is the
/// border of the faces touching vertices closer than gamma (so it is the
/// distance-gamma ring away from the mesh border, and includes mesh border
/// vertices otherwise); interior is everything else in the patch.
struct Patch {
  int center = -1;
  int gamma = 0;
  std::vector<int> vertices;
  std::vector<int> faces;
  std::vector<int> boundary;  // ordered counter-clockwise when boundary_is_loop
  std::vector<int> interior;
  bool boundary_is_loop = false;
};

struct MeshTopology {
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<int>> faces_of_vertex;
  static MeshTopology of(const TriMesh& mesh);
};

Patch gamma_ring(const TriMesh& mesh, int center, int gamma);
Patch gamma_ring(const TriMesh& mesh, const MeshTopology& topo, int center, int gamma);

/// Convex, counter-clockwise and winding once; consecutive edge cross
/// products may be as low as -1e-10 * scale^2.
bool is_convex_loop(std::span<const Vec2> loop);

struct QcOptions {
  double eps = 0.7;        // distortion threshold on |mu|
  int gamma = 2;           // initial ring size
  int gamma_max = 5;       // ring growth cap while the target is not convex
  double mu_clamp = 0.99;  // |mu| cap before the auxiliary metric
  int max_passes = 3;      // extra sweeps run only while flips remain
};

enum class PatchOutcome {
  Corrected,        // auxiliary-metric harmonic map, flip-free
  ClampedWeights,   // auxiliary weights floored at a small positive value
  UniformWeights,   // Tutte map onto the patch boundary
  Kept,             // already flip-free and every candidate flipped; left as is
  Unresolved,       // flips remained; the least-flipped candidate was kept
};

struct QcPatchLog {
  int center = -1;
  int gamma = 0;
  bool convex = true;
  PatchOutcome outcome = PatchOutcome::Corrected;
  std::string note;
};

struct QcResult {
  TriMesh mesh;
  BeltramiField field;  // of M0 -> corrected mesh
  std::vector<QcPatchLog> patches;
  std::vector<std::string> warnings;
  int passes = 0;

  std::size_t count(PatchOutcome o) const;
  bool skipped_any() const { return count(PatchOutcome::Unresolved) > 0; }
};

/// Patch-wise correction of every vertex with |mu| > eps, worst first:
/// diffuse the ring's boundary coefficients inward, build the auxiliary
/// metric, and harmonically re-map the patch interior with its boundary held
/// at the current positions. Connectivity is never changed.
QcResult qc_correct(const TriMesh& m0, const TriMesh& mhat, const BeltramiField& mu,
                    const QcOptions& options = {});

/// CSV rows: vertex,abs_mu,arg_mu (abs_mu is inf for sentinel vertices).
void write_beltrami_csv(const BeltramiField& field, std::ostream& out);

}  // namespace tot
