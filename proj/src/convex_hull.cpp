// Lower convex hull of lifted sites by quickhull with outside sets.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <Eigen/Geometry>

#include "tot/error.hpp"
#include "tot/geometry.hpp"

namespace tot {
namespace {

struct HullFace {
  std::array<int, 3> v{};
  std::array<int, 3> nbr{-1, -1, -1};  // nbr[k] shares edge v[k] -> v[k+1]
  Vec3 normal = Vec3::Zero();
  double offset = 0.0;
  std::vector<int> outside;
  bool alive = true;
  int visit = -1;
};

class QuickHull {
 public:
  QuickHull(std::span<const Vec3> pts, double eps) : pts_(pts), eps_(eps) {}

  // Returns false when every point is within eps of a common plane.
  bool build() {
    std::array<int, 4> s{};
    if (!initial_simplex(s)) return false;
    create_simplex(s);
    std::vector<int> stack;
    for (std::size_t f = 0; f < faces_.size(); ++f)
      if (!faces_[f].outside.empty()) stack.push_back(static_cast<int>(f));
    int round = 0;
    while (!stack.empty()) {
      int f = stack.back();
      stack.pop_back();
      if (!faces_[f].alive || faces_[f].outside.empty()) continue;
      add_point(f, round++, stack);
    }
    return true;
  }

  const std::vector<HullFace>& faces() const { return faces_; }

 private:
  double dist(const HullFace& f, int p) const { return f.normal.dot(pts_[p]) - f.offset; }

  int make_face(int a, int b, int c) {
    HullFace f;
    f.v = {a, b, c};
    Vec3 n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    double len = n.norm();
    f.normal = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    f.offset = f.normal.dot(pts_[a]);
    faces_.push_back(std::move(f));
    return static_cast<int>(faces_.size()) - 1;
  }

  bool initial_simplex(std::array<int, 4>& s) const {
    const int n = static_cast<int>(pts_.size());
    // Farthest pair among the axis extremes.
    std::array<int, 6> ext{};
    ext.fill(0);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a) {
        if (pts_[i][a] < pts_[ext[2 * a]][a]) ext[2 * a] = i;
        if (pts_[i][a] > pts_[ext[2 * a + 1]][a]) ext[2 * a + 1] = i;
      }
    double best = -1.0;
    for (int a = 0; a < 6; ++a)
      for (int b = a + 1; b < 6; ++b) {
        double d = (pts_[ext[a]] - pts_[ext[b]]).squaredNorm();
        if (d > best) { best = d; s[0] = ext[a]; s[1] = ext[b]; }
      }
    if (best <= eps_ * eps_) return false;
    Vec3 dir = (pts_[s[1]] - pts_[s[0]]).normalized();
    best = -1.0;
    for (int i = 0; i < n; ++i) {
      Vec3 r = pts_[i] - pts_[s[0]];
      double d = (r - r.dot(dir) * dir).norm();
      if (d > best) { best = d; s[2] = i; }
    }
    if (best <= eps_) return false;
    Vec3 nrm = (pts_[s[1]] - pts_[s[0]]).cross(pts_[s[2]] - pts_[s[0]]).normalized();
    best = -1.0;
    for (int i = 0; i < n; ++i) {
      double d = std::abs(nrm.dot(pts_[i] - pts_[s[0]]));
      if (d > best) { best = d; s[3] = i; }
    }
    return best > eps_;
  }

  void create_simplex(const std::array<int, 4>& s) {
    Vec3 centre = (pts_[s[0]] + pts_[s[1]] + pts_[s[2]] + pts_[s[3]]) / 4.0;
    const std::array<std::array<int, 3>, 4> tris{{{s[0], s[1], s[2]},
                                                  {s[0], s[3], s[1]},
                                                  {s[1], s[3], s[2]},
                                                  {s[0], s[2], s[3]}}};
    for (auto t : tris) {
      Vec3 n = (pts_[t[1]] - pts_[t[0]]).cross(pts_[t[2]] - pts_[t[0]]);
      if (n.dot(centre - pts_[t[0]]) > 0.0) std::swap(t[1], t[2]);
      make_face(t[0], t[1], t[2]);
    }
    std::unordered_map<std::uint64_t, std::pair<int, int>> edge_owner;
    auto dkey = [](int a, int b) {
      return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    };
    for (int f = 0; f < 4; ++f)
      for (int k = 0; k < 3; ++k) edge_owner[dkey(faces_[f].v[k], faces_[f].v[(k + 1) % 3])] = {f, k};
    for (int f = 0; f < 4; ++f)
      for (int k = 0; k < 3; ++k)
        faces_[f].nbr[k] = edge_owner.at(dkey(faces_[f].v[(k + 1) % 3], faces_[f].v[k])).first;

    std::vector<char> in_simplex(pts_.size(), 0);
    for (int i : s) in_simplex[i] = 1;
    for (int p = 0; p < static_cast<int>(pts_.size()); ++p) {
      if (in_simplex[p]) continue;
      for (int f = 0; f < 4; ++f)
        if (dist(faces_[f], p) > eps_) {
          faces_[f].outside.push_back(p);
          break;
        }
    }
  }

  void add_point(int start, int round, std::vector<int>& stack) {
    const HullFace& sf = faces_[start];
    int apex = sf.outside.front();
    double far = dist(sf, apex);
    for (int q : sf.outside) {
      double d = dist(sf, q);
      if (d > far) { far = d; apex = q; }
    }

    std::vector<int> visible{start};
    faces_[start].visit = round;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      for (int g : faces_[visible[k]].nbr) {
        if (faces_[g].visit == round) continue;
        if (dist(faces_[g], apex) > eps_) {
          faces_[g].visit = round;
          visible.push_back(g);
        }
      }
    }

    std::vector<int> created;
    std::unordered_map<int, int> by_first;  // horizon start vertex -> new face
    for (int f : visible) {
      for (int k = 0; k < 3; ++k) {
        int g = faces_[f].nbr[k];
        if (faces_[g].visit == round) continue;
        int a = faces_[f].v[k], b = faces_[f].v[(k + 1) % 3];
        int nf = make_face(a, b, apex);
        faces_[nf].nbr[0] = g;
        for (int kk = 0; kk < 3; ++kk)
          if (faces_[g].v[kk] == b && faces_[g].v[(kk + 1) % 3] == a) faces_[g].nbr[kk] = nf;
        if (!by_first.emplace(a, nf).second)
          throw Error(ErrorCode::Degenerate, "convex hull horizon is not a simple loop");
        created.push_back(nf);
      }
    }
    for (int nf : created) {
      int b = faces_[nf].v[1];
      auto it = by_first.find(b);
      if (it == by_first.end())
        throw Error(ErrorCode::Degenerate, "convex hull horizon is not closed");
      faces_[nf].nbr[1] = it->second;
      faces_[it->second].nbr[2] = nf;
    }

    for (int f : visible) {
      faces_[f].alive = false;
      for (int q : faces_[f].outside) {
        if (q == apex) continue;
        for (int nf : created)
          if (dist(faces_[nf], q) > eps_) {
            faces_[nf].outside.push_back(q);
            break;
          }
      }
      std::vector<int>().swap(faces_[f].outside);
    }
    for (int nf : created)
      if (!faces_[nf].outside.empty()) stack.push_back(nf);
  }

  std::span<const Vec3> pts_;
  double eps_;
  std::vector<HullFace> faces_;
};

// Projected convex hull (monotone chain), counter-clockwise, collinear points dropped.
std::vector<int> planar_hull(std::span<const Vec3> pts) {
  std::vector<int> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return pts[a].x() < pts[b].x() || (pts[a].x() == pts[b].x() && pts[a].y() < pts[b].y());
  });
  auto cross = [&](int o, int a, int b) {
    return (pts[a].x() - pts[o].x()) * (pts[b].y() - pts[o].y()) -
           (pts[a].y() - pts[o].y()) * (pts[b].x() - pts[o].x());
  };
  std::vector<int> h(2 * idx.size());
  std::size_t k = 0;
  for (int i : idx) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], i) <= 0) --k;
    h[k++] = i;
  }
  for (std::size_t t = idx.size() - 1, lo = k + 1; t-- > 0;) {
    int i = idx[t];
    while (k >= lo && cross(h[k - 2], h[k - 1], i) <= 0) --k;
    h[k++] = i;
  }
  h.resize(k > 0 ? k - 1 : 0);
  return h;
}

}  // namespace

LowerHull lower_convex_hull(std::span<const Vec3> points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "lower hull needs at least 3 points");

  double scale = 0.0;
  for (const Vec3& p : points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  scale = std::max(scale, 1e-300);
  const double eps = 1e-12 * scale;

  std::vector<int> proj = planar_hull(points);
  if (proj.size() < 3)
    throw Error(ErrorCode::Degenerate, "projected points are collinear");

  LowerHull out;
  out.neighbors.assign(n, {});
  out.on_hull.assign(n, false);

  QuickHull qh(points, eps);
  if (!qh.build()) {
    out.coplanar = true;
    for (std::size_t i = 0; i < n; ++i) {
      out.on_hull[i] = true;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) out.neighbors[i].push_back(static_cast<int>(j));
    }
    for (std::size_t k = 1; k + 1 < proj.size(); ++k)
      out.faces.push_back({proj[0], proj[k], proj[k + 1]});
    return out;
  }

  for (const HullFace& f : qh.faces()) {
    if (!f.alive || !(f.normal.z() < -1e-12)) continue;
    out.faces.push_back({f.v[0], f.v[2], f.v[1]});
    for (int k = 0; k < 3; ++k) {
      int a = f.v[k], b = f.v[(k + 1) % 3];
      out.on_hull[a] = true;
      out.neighbors[a].push_back(b);
      out.neighbors[b].push_back(a);
    }
  }
  for (auto& nb : out.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  return out;
}

}  // namespace tot
