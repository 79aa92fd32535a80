#include "tot/quasiconformal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "tot/error.hpp"
#include "tot/harmonic.hpp"

namespace tot {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Complex face_beltrami(const std::array<Vec2, 3>& src, const std::array<Vec2, 3>& dst) {
  Eigen::Matrix2d S, D;
  S.col(0) = src[1] - src[0];
  S.col(1) = src[2] - src[0];
  D.col(0) = dst[1] - dst[0];
  D.col(1) = dst[2] - dst[0];
  double det = S.determinant();
  double scale = std::max(S.col(0).squaredNorm(), S.col(1).squaredNorm());
  if (!(std::abs(det) > 1e-14 * scale))
    throw Error(ErrorCode::Degenerate, "degenerate source triangle");
  Eigen::Matrix2d J = D * S.inverse();
  Complex fx(J(0, 0), J(1, 0));
  Complex fy(J(0, 1), J(1, 1));
  const Complex i(0.0, 1.0);
  Complex fz = 0.5 * (fx - i * fy);
  Complex fzb = 0.5 * (fx + i * fy);
  double mag = std::max(std::abs(fz), std::abs(fzb));
  if (!(std::abs(fz) > 1e-14 * mag)) return Complex(kInf, 0.0);
  return fzb / fz;
}

std::vector<Complex> vertex_beltrami(const TriMesh& mesh, std::span<const Complex> per_face) {
  if (per_face.size() != mesh.num_faces())
    throw Error(ErrorCode::InvalidArgument, "per-face coefficient count mismatch");
  const std::size_t n = mesh.num_vertices();
  std::vector<Complex> sum(n, Complex(0.0, 0.0));
  std::vector<double> weight(n, 0.0);
  std::vector<char> sentinel(n, 0);
  const auto& faces = mesh.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    double a = face_area(mesh, static_cast<int>(f));
    for (int v : faces[f]) {
      if (is_sentinel(per_face[f])) sentinel[v] = 1;
      else {
        sum[v] += a * per_face[f];
        weight[v] += a;
      }
    }
  }
  std::vector<Complex> out(n);
  for (std::size_t v = 0; v < n; ++v)
    out[v] = sentinel[v] ? Complex(kInf, 0.0) : (weight[v] > 0.0 ? sum[v] / weight[v] : Complex(0.0, 0.0));
  return out;
}

double BeltramiField::max_vertex_magnitude() const {
  double m = 0.0;
  for (const Complex& mu : per_vertex) m = std::max(m, std::abs(mu));
  return m;
}

BeltramiField beltrami_field(const TriMesh& src, std::span<const Vec2> dst) {
  if (dst.size() != src.num_vertices())
    throw Error(ErrorCode::InvalidArgument, "position count mismatch");
  BeltramiField field;
  const auto& faces = src.faces();
  field.per_face.resize(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    field.per_face[f] = face_beltrami({src.xy(t[0]), src.xy(t[1]), src.xy(t[2])},
                                      {dst[t[0]], dst[t[1]], dst[t[2]]});
  }
  field.per_vertex = vertex_beltrami(src, field.per_face);
  return field;
}

double auxiliary_metric(Complex dz, Complex mu_edge) {
  return std::abs(dz + mu_edge * std::conj(dz));
}

MeshTopology MeshTopology::of(const TriMesh& mesh) {
  return MeshTopology{vertex_neighbors(mesh), vertex_faces(mesh)};
}

Patch gamma_ring(const TriMesh& mesh, int center, int gamma) {
  return gamma_ring(mesh, MeshTopology::of(mesh), center, gamma);
}

Patch gamma_ring(const TriMesh& mesh, const MeshTopology& topo, int center, int gamma) {
  if (center < 0 || static_cast<std::size_t>(center) >= mesh.num_vertices())
    throw Error(ErrorCode::InvalidArgument, "patch centre out of range");
  if (gamma < 1) throw Error(ErrorCode::InvalidArgument, "gamma must be positive");
  Patch p;
  p.center = center;
  p.gamma = gamma;

  std::unordered_map<int, int> dist{{center, 0}};
  std::vector<int> frontier{center};
  p.vertices.push_back(center);
  for (int d = 1; d <= gamma && !frontier.empty(); ++d) {
    std::vector<int> next;
    for (int v : frontier)
      for (int u : topo.neighbors[v])
        if (dist.emplace(u, d).second) {
          next.push_back(u);
          p.vertices.push_back(u);
        }
    frontier = std::move(next);
  }
  std::sort(p.vertices.begin(), p.vertices.end());

  std::unordered_set<int> face_set;
  for (int v : p.vertices)
    if (dist.at(v) < gamma)
      for (int f : topo.faces_of_vertex[v]) face_set.insert(f);
  p.faces.assign(face_set.begin(), face_set.end());
  std::sort(p.faces.begin(), p.faces.end());

  // Border of the face set: half-edges without a twin inside the set.
  const auto& faces = mesh.faces();
  auto dkey = [](int a, int b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };
  std::unordered_set<std::uint64_t> half;
  for (int f : p.faces)
    for (int k = 0; k < 3; ++k) half.insert(dkey(faces[f][k], faces[f][(k + 1) % 3]));
  std::map<int, int> next;
  bool simple = true;
  std::vector<int> border;
  for (int f : p.faces)
    for (int k = 0; k < 3; ++k) {
      int a = faces[f][k], b = faces[f][(k + 1) % 3];
      if (half.count(dkey(b, a))) continue;
      if (!next.emplace(a, b).second) simple = false;
      border.push_back(a);
      border.push_back(b);
    }
  std::sort(border.begin(), border.end());
  border.erase(std::unique(border.begin(), border.end()), border.end());

  if (simple && !next.empty()) {
    int start = next.begin()->first;
    std::vector<int> loop{start};
    for (int v = next.at(start); v != start; v = next.at(v)) {
      loop.push_back(v);
      if (loop.size() > next.size() || !next.count(v)) break;
    }
    if (loop.size() == next.size()) {
      p.boundary = std::move(loop);
      p.boundary_is_loop = true;
    }
  }
  if (!p.boundary_is_loop) p.boundary = border;

  std::unordered_set<int> on_border(border.begin(), border.end());
  for (int v : p.vertices)
    if (!on_border.count(v) && dist.at(v) < gamma + 1) {
      // Vertices at distance gamma that are not on the border are only
      // interior when all their faces lie in the patch.
      bool enclosed = true;
      for (int f : topo.faces_of_vertex[v])
        if (!face_set.count(f)) { enclosed = false; break; }
      if (enclosed) p.interior.push_back(v);
    }
  return p;
}

bool is_convex_loop(std::span<const Vec2> loop) {
  const std::size_t n = loop.size();
  if (n < 3) return false;
  Vec2 lo = loop[0], hi = loop[0];
  for (const Vec2& q : loop) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  double scale = (hi - lo).maxCoeff();
  if (!(scale > 0.0)) return false;
  double tol = 1e-10 * scale * scale;
  double turning = 0.0, area2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& a = loop[(k + n - 1) % n];
    const Vec2& b = loop[k];
    const Vec2& c = loop[(k + 1) % n];
    Vec2 e0 = b - a, e1 = c - b;
    double cr = e0.x() * e1.y() - e0.y() * e1.x();
    if (cr < -tol) return false;
    if (e0.squaredNorm() == 0.0 || e1.squaredNorm() == 0.0) return false;
    turning += std::atan2(cr, e0.dot(e1));
    area2 += b.x() * c.y() - b.y() * c.x();
  }
  return area2 > 0.0 && std::abs(turning - 2.0 * std::numbers::pi) < 1e-6;
}

std::size_t QcResult::count(PatchOutcome o) const {
  return static_cast<std::size_t>(
      std::count_if(patches.begin(), patches.end(), [&](const QcPatchLog& l) { return l.outcome == o; }));
}

namespace {

Complex clamp_mu(Complex mu, double cap) {
  double m = std::abs(mu);
  if (!std::isfinite(m)) return Complex(0.0, 0.0);
  return m > cap ? mu * (cap / m) : mu;
}

class Corrector {
 public:
  Corrector(const TriMesh& m0, const TriMesh& mhat, const BeltramiField& mu, const QcOptions& opt)
      : m0_(m0), opt_(opt), topo_(MeshTopology::of(m0)), pos_(mhat.positions_2d()), field_(mu) {
    w0_ = cotangent_weights(m0_);
    face_area_.resize(m0_.num_faces());
    for (std::size_t f = 0; f < face_area_.size(); ++f) face_area_[f] = face_area(m0_, static_cast<int>(f));
  }

  QcResult run() {
    QcResult res;
    for (int pass = 0; pass < std::max(1, opt_.max_passes); ++pass) {
      std::vector<int> bad;
      for (std::size_t v = 0; v < pos_.size(); ++v)
        if (field_.vertex_magnitude(static_cast<int>(v)) > opt_.eps) bad.push_back(static_cast<int>(v));
      if (bad.empty()) break;
      if (pass > 0 && flipped_faces(m0_.faces(), pos_).empty()) break;
      std::stable_sort(bad.begin(), bad.end(), [&](int a, int b) {
        return field_.vertex_magnitude(a) > field_.vertex_magnitude(b);
      });
      for (int v : bad) {
        if (field_.vertex_magnitude(v) <= opt_.eps) continue;
        correct_patch(v, res);
      }
      ++res.passes;
    }
    res.mesh = m0_.with_positions(pos_);
    res.field = field_;
    return res;
  }

 private:
  // Boundary value for the diffusion: the vertex coefficient, or for a
  // sentinel vertex the average over its non-sentinel faces; capped.
  Complex boundary_mu(int v) const {
    Complex mu = field_.per_vertex[v];
    if (!is_sentinel(mu)) return clamp_mu(mu, opt_.mu_clamp);
    Complex sum(0.0, 0.0);
    double w = 0.0;
    for (int f : topo_.faces_of_vertex[v]) {
      w += face_area_[f];
      if (!is_sentinel(field_.per_face[f])) sum += face_area_[f] * field_.per_face[f];
    }
    return clamp_mu(w > 0.0 ? sum / w : Complex(0.0, 0.0), opt_.mu_clamp);
  }

  std::size_t count_flips(const std::vector<int>& faces, const std::vector<Vec2>& pos) const {
    std::size_t c = 0;
    for (int f : faces) {
      const Face& t = m0_.faces()[f];
      if (signed_area_2d(pos[t[0]], pos[t[1]], pos[t[2]]) <= 0.0) ++c;
    }
    return c;
  }

  void refresh_field(const std::vector<int>& moved) {
    std::unordered_set<int> faces, verts;
    for (int v : moved)
      for (int f : topo_.faces_of_vertex[v]) faces.insert(f);
    for (int f : faces) {
      const Face& t = m0_.faces()[f];
      field_.per_face[f] = face_beltrami({m0_.xy(t[0]), m0_.xy(t[1]), m0_.xy(t[2])},
                                         {pos_[t[0]], pos_[t[1]], pos_[t[2]]});
      for (int v : t) verts.insert(v);
    }
    for (int v : verts) {
      Complex sum(0.0, 0.0);
      double w = 0.0;
      bool sentinel = false;
      for (int f : topo_.faces_of_vertex[v]) {
        if (is_sentinel(field_.per_face[f])) sentinel = true;
        else {
          sum += face_area_[f] * field_.per_face[f];
          w += face_area_[f];
        }
      }
      field_.per_vertex[v] =
          sentinel ? Complex(kInf, 0.0) : (w > 0.0 ? sum / w : Complex(0.0, 0.0));
    }
  }

  std::vector<Vec2> harmonic_patch(const Patch& patch, const EdgeWeightMap& w) const {
    LaplaceProblem prob;
    prob.num_vertices = pos_.size();
    prob.weights = w;
    prob.domain = patch.vertices;
    for (int b : patch.boundary) {
      Eigen::VectorXd val(2);
      val << pos_[b].x(), pos_[b].y();
      prob.boundary[b] = val;
    }
    LaplaceSolution sol = solve_laplace(prob);
    std::vector<Vec2> out = pos_;
    for (int v : patch.interior) out[v] = Vec2(sol.values(v, 0), sol.values(v, 1));
    return out;
  }

  void correct_patch(int center, QcResult& res) {
    QcPatchLog log;
    log.center = center;
    Patch patch;
    bool convex = false;
    for (int gamma = opt_.gamma; gamma <= std::max(opt_.gamma, opt_.gamma_max); ++gamma) {
      patch = gamma_ring(m0_, topo_, center, gamma);
      if (patch.boundary_is_loop) {
        std::vector<Vec2> loop;
        for (int b : patch.boundary) loop.push_back(pos_[b]);
        convex = is_convex_loop(loop);
      }
      if (convex) break;
    }
    log.gamma = patch.gamma;
    log.convex = convex;
    if (!convex) {
      res.warnings.push_back("patch at vertex " + std::to_string(center) +
                             ": target boundary not convex at gamma " + std::to_string(patch.gamma));
    }
    if (patch.interior.empty()) {
      log.outcome = count_flips(patch.faces, pos_) > 0 ? PatchOutcome::Unresolved : PatchOutcome::Kept;
      log.note = "no free vertices";
      res.patches.push_back(log);
      return;
    }

    // Harmonic fill of the coefficients from the patch boundary.
    LaplaceProblem diffuse;
    diffuse.num_vertices = pos_.size();
    diffuse.weights = w0_;
    diffuse.domain = patch.vertices;
    for (int b : patch.boundary) {
      Complex mu = boundary_mu(b);
      Eigen::VectorXd val(2);
      val << mu.real(), mu.imag();
      diffuse.boundary[b] = val;
    }
    LaplaceSolution filled = solve_laplace(diffuse);
    std::unordered_map<int, Complex> mu_hat;
    for (int v : patch.vertices)
      mu_hat[v] = clamp_mu(Complex(filled.values(v, 0), filled.values(v, 1)), opt_.mu_clamp);

    std::vector<Face> pfaces;
    for (int f : patch.faces) pfaces.push_back(m0_.faces()[f]);

    std::vector<std::pair<PatchOutcome, EdgeWeightMap>> candidates;
    EdgeLengthMap aux;
    for (const Face& t : pfaces)
      for (int k = 0; k < 3; ++k) {
        int a = t[k], b = t[(k + 1) % 3];
        Vec2 d = m0_.xy(b) - m0_.xy(a);
        aux(a, b) = auxiliary_metric(Complex(d.x(), d.y()), 0.5 * (mu_hat.at(a) + mu_hat.at(b)));
      }
    try {
      EdgeWeightMap w = cotangent_weights(pfaces, aux);
      double mean = 0.0;
      for (const auto& kv : w) mean += std::abs(kv.second);
      mean /= std::max<std::size_t>(w.size(), 1);
      candidates.emplace_back(PatchOutcome::Corrected, w);
      candidates.emplace_back(PatchOutcome::ClampedWeights, clamp_weights(w, 1e-6 * mean));
    } catch (const Error& e) {
      res.warnings.push_back("patch at vertex " + std::to_string(center) +
                             ": auxiliary metric invalid (" + e.what() + ")");
      log.note = "auxiliary metric invalid";
    }
    EdgeWeightMap uniform;
    for (const Face& t : pfaces)
      for (int k = 0; k < 3; ++k) uniform(t[k], t[(k + 1) % 3]) = 1.0;
    candidates.emplace_back(PatchOutcome::UniformWeights, uniform);

    std::size_t best_flips = count_flips(patch.faces, pos_);
    std::optional<std::vector<Vec2>> best;
    PatchOutcome best_outcome = PatchOutcome::Unresolved;
    for (auto& [outcome, w] : candidates) {
      std::vector<Vec2> trial;
      try {
        trial = harmonic_patch(patch, w);
      } catch (const Error&) {
        continue;
      }
      std::size_t flips = count_flips(patch.faces, trial);
      if (flips == 0) {
        best = std::move(trial);
        best_outcome = outcome;
        best_flips = 0;
        break;
      }
      if (flips < best_flips || !best) {
        if (flips <= best_flips) {
          best_flips = flips;
          best = std::move(trial);
        }
      }
    }
    if (best_flips > 0) log.outcome = PatchOutcome::Unresolved;
    else log.outcome = best ? best_outcome : PatchOutcome::Kept;
    if (best) {
      pos_ = std::move(*best);
      refresh_field(patch.interior);
    }
    if (log.outcome == PatchOutcome::Unresolved) {
      res.warnings.push_back("patch at vertex " + std::to_string(center) + ": " +
                             std::to_string(best_flips) + " flipped faces remain");
    }
    res.patches.push_back(log);
  }

  const TriMesh& m0_;
  QcOptions opt_;
  MeshTopology topo_;
  std::vector<Vec2> pos_;
  BeltramiField field_;
  EdgeWeightMap w0_;
  std::vector<double> face_area_;
};

}  // namespace

QcResult qc_correct(const TriMesh& m0, const TriMesh& mhat, const BeltramiField& mu,
                    const QcOptions& options) {
  if (m0.dim() != 2 || mhat.num_vertices() != m0.num_vertices())
    throw Error(ErrorCode::InvalidArgument, "QC correction needs two planar meshes of equal size");
  if (m0.faces() != mhat.faces())
    throw Error(ErrorCode::InvalidArgument, "QC correction needs identical connectivity");
  if (!(options.eps > 0.0 && options.eps <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "distortion threshold must lie in (0, 1]");
  if (mu.per_vertex.size() != m0.num_vertices() || mu.per_face.size() != m0.num_faces())
    throw Error(ErrorCode::InvalidArgument, "Beltrami field size mismatch");
  Corrector c(m0, mhat, mu, options);
  return c.run();
}

void write_beltrami_csv(const BeltramiField& field, std::ostream& out) {
  out << "vertex,abs_mu,arg_mu\n" << std::setprecision(12);
  for (std::size_t v = 0; v < field.per_vertex.size(); ++v) {
    const Complex& mu = field.per_vertex[v];
    double m = std::abs(mu);
    out << v << ',' << (std::isfinite(m) ? m : kInf) << ',' << (std::isfinite(m) ? std::arg(mu) : 0.0)
        << '\n';
  }
}

}  // namespace tot
