#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

#include "tot/error.hpp"
#include "tot/geometry.hpp"

namespace tot {

Rect Rect::make(double xmin, double xmax, double ymin, double ymax) {
  if (!(xmin < xmax) || !(ymin < ymax))
    throw Error(ErrorCode::InvalidArgument, "rectangle must satisfy xmin < xmax and ymin < ymax");
  return Rect{xmin, xmax, ymin, ymax};
}

double Rect::extent() const {
  return std::max({std::abs(xmin), std::abs(xmax), std::abs(ymin), std::abs(ymax),
                   xmax - xmin, ymax - ymin});
}

std::vector<Vec2> Rect::corners() const {
  return {Vec2(xmin, ymin), Vec2(xmax, ymin), Vec2(xmax, ymax), Vec2(xmin, ymax)};
}

Rect Rect::scaled_bounding_square(std::span<const Vec2> points, double scale) {
  if (points.empty()) throw Error(ErrorCode::InvalidArgument, "no points");
  Vec2 lo = points[0], hi = points[0];
  for (const Vec2& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vec2 c = 0.5 * (lo + hi);
  double half = 0.5 * std::max(hi.x() - lo.x(), hi.y() - lo.y()) * scale;
  return make(c.x() - half, c.x() + half, c.y() - half, c.y() + half);
}

LabeledPolygon clip_polygon(const LabeledPolygon& poly, const HalfPlane& hp, int label,
                            double tol) {
  LabeledPolygon out;
  const std::size_t n = poly.points.size();
  if (n == 0) return out;
  double nn = hp.normal.norm();
  if (nn == 0.0) return hp.offset <= 0.0 ? poly : out;
  Vec2 unit = hp.normal / nn;
  double c = hp.offset / nn;

  std::vector<double> s(n);
  bool all_in = true, all_out = true;
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = unit.dot(poly.points[k]) - c;
    if (s[k] < -tol) all_in = false;
    else all_out = false;
  }
  if (all_in) return poly;
  if (all_out) return out;

  out.points.reserve(n + 1);
  out.labels.reserve(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t k1 = (k + 1) % n;
    const Vec2& a = poly.points[k];
    const Vec2& b = poly.points[k1];
    bool a_in = s[k] >= -tol, b_in = s[k1] >= -tol;
    if (a_in) {
      out.points.push_back(a);
      out.labels.push_back(poly.labels[k]);
    }
    if (a_in != b_in) {
      double t = s[k] / (s[k] - s[k1]);
      Vec2 x = a + t * (b - a);
      out.points.push_back(x);
      out.labels.push_back(a_in ? label : poly.labels[k]);
    }
  }

  // Drop zero-length edges; the later vertex keeps the outgoing label.
  LabeledPolygon clean;
  const std::size_t m = out.points.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Vec2& nxt = out.points[(k + 1) % m];
    if ((out.points[k] - nxt).norm() <= tol && m > 1) continue;
    clean.points.push_back(out.points[k]);
    clean.labels.push_back(out.labels[k]);
  }
  if (clean.points.size() < 3) return LabeledPolygon{};
  return clean;
}

std::vector<Vec2> clip_polygon(std::span<const Vec2> poly, const HalfPlane& half_plane) {
  LabeledPolygon lp{std::vector<Vec2>(poly.begin(), poly.end()), std::vector<int>(poly.size(), -1)};
  double scale = 1.0;
  for (const Vec2& p : poly) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  return clip_polygon(lp, half_plane, 0, 1e-12 * scale).points;
}

AreaCentroid cell_area_centroid(std::span<const Vec2> poly) {
  AreaCentroid out;
  const std::size_t n = poly.size();
  if (n < 3) return out;
  double a2 = 0.0;
  Vec2 c = Vec2::Zero();
  // Shoelace relative to the first vertex for accuracy away from the origin.
  const Vec2& o = poly[0];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    Vec2 p = poly[k] - o, q = poly[k + 1] - o;
    double cr = p.x() * q.y() - p.y() * q.x();
    a2 += cr;
    c += cr * (p + q);
  }
  out.area = std::max(0.0, 0.5 * a2);
  if (a2 > 0.0) out.centroid = o + c / (3.0 * a2);
  return out;
}

std::size_t PowerDiagram::empty_cell_count() const {
  return static_cast<std::size_t>(std::count(areas.begin(), areas.end(), 0.0));
}

PowerDiagram power_diagram(std::span<const Vec2> sites, std::span<const double> heights,
                           const Rect& omega) {
  const std::size_t n = sites.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "power diagram needs at least one site");
  if (heights.size() != n) throw Error(ErrorCode::InvalidArgument, "height count mismatch");
  Rect::make(omega.xmin, omega.xmax, omega.ymin, omega.ymax);

  {
    std::vector<std::pair<double, double>> sorted;
    sorted.reserve(n);
    for (const Vec2& p : sites) sorted.emplace_back(p.x(), p.y());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 1; k < n; ++k)
      if (sorted[k] == sorted[k - 1])
        throw Error(ErrorCode::DuplicateSites, "duplicate power diagram sites");
  }

  PowerDiagram pd;
  pd.omega = omega;
  pd.sites.assign(sites.begin(), sites.end());
  pd.heights.assign(heights.begin(), heights.end());
  pd.cells.assign(n, {});
  pd.areas.assign(n, 0.0);
  pd.centroids.assign(n, std::nullopt);

  double scale = omega.extent();
  for (const Vec2& p : sites) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;

  std::vector<std::vector<int>> candidates(n);
  std::vector<bool> active(n, true);
  bool brute = n < 3;
  if (!brute) {
    std::vector<Vec3> lifted(n);
    for (std::size_t i = 0; i < n; ++i) lifted[i] = Vec3(sites[i].x(), sites[i].y(), -heights[i]);
    try {
      LowerHull hull = lower_convex_hull(lifted);
      candidates = std::move(hull.neighbors);
      active = std::move(hull.on_hull);
    } catch (const Error&) {
      // Collinear sites or an unstable horizon: clip against every site.
      brute = true;
    }
  }
  if (brute) {
    for (std::size_t i = 0; i < n; ++i) {
      active[i] = true;
      candidates[i].clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) candidates[i].push_back(static_cast<int>(j));
    }
  }

  std::vector<std::map<int, double>> shared(n);
  const std::vector<Vec2> box = omega.corners();
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    LabeledPolygon cell{box, {-1, -2, -3, -4}};
    for (int j : candidates[i]) {
      HalfPlane hp{sites[i] - sites[j], heights[j] - heights[i]};
      cell = clip_polygon(cell, hp, j, tol);
      if (cell.empty()) break;
    }
    if (cell.empty()) continue;
    AreaCentroid ac = cell_area_centroid(cell.points);
    if (ac.area <= 0.0) continue;
    pd.areas[i] = ac.area;
    pd.centroids[i] = ac.centroid;
    const std::size_t m = cell.points.size();
    for (std::size_t k = 0; k < m; ++k) {
      if (cell.labels[k] < 0) continue;
      shared[i][cell.labels[k]] += (cell.points[(k + 1) % m] - cell.points[k]).norm();
    }
    pd.cells[i] = std::move(cell.points);
  }

  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [j, len] : shared[i]) {
      if (static_cast<std::size_t>(j) <= i && shared[j].count(static_cast<int>(i))) continue;
      double other = 0.0;
      auto it = shared[j].find(static_cast<int>(i));
      if (it != shared[j].end()) other = it->second;
      double L = 0.5 * (len + other);
      if (L > tol) {
        int a = static_cast<int>(std::min<std::size_t>(i, j));
        int b = static_cast<int>(std::max<std::size_t>(i, j));
        pd.adjacency.push_back({a, b, L});
      }
    }
  std::sort(pd.adjacency.begin(), pd.adjacency.end(), [](const DualEdge& a, const DualEdge& b) {
    return a.i < b.i || (a.i == b.i && a.j < b.j);
  });
  return pd;
}

void write_power_diagram_svg(const PowerDiagram& pd, std::ostream& out) {
  const Rect& r = pd.omega;
  double w = r.xmax - r.xmin, h = r.ymax - r.ymin;
  double stroke = 0.002 * std::max(w, h);
  out << std::fixed << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << r.xmin << ' ' << -r.ymax << ' '
      << w << ' ' << h << "\">\n";
  out << "<rect x=\"" << r.xmin << "\" y=\"" << -r.ymax << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\" stroke=\"black\" stroke-width=\"" << stroke << "\"/>\n";
  for (const auto& cell : pd.cells) {
    if (cell.empty()) continue;
    out << "<polygon fill=\"none\" stroke=\"black\" stroke-width=\"" << stroke << "\" points=\"";
    for (std::size_t k = 0; k < cell.size(); ++k)
      out << (k ? " " : "") << cell[k].x() << ',' << -cell[k].y();
    out << "\"/>\n";
  }
  for (const Vec2& p : pd.sites)
    out << "<circle cx=\"" << p.x() << "\" cy=\"" << -p.y() << "\" r=\"" << 2 * stroke
        << "\" fill=\"red\"/>\n";
  out << "</svg>\n";
}

}  // namespace tot
