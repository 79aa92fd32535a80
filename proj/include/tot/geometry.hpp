#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tot/mesh.hpp"

namespace tot {

struct Rect {
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;

  /// Throws when the rectangle is empty.
  static Rect make(double xmin, double xmax, double ymin, double ymax);
  double area() const { return (xmax - xmin) * (ymax - ymin); }
  double extent() const;
  bool contains(const Vec2& p, double tol = 0.0) const {
    return p.x() >= xmin - tol && p.x() <= xmax + tol && p.y() >= ymin - tol && p.y() <= ymax + tol;
  }
  /// Counter-clockwise corners starting at (xmin, ymin).
  std::vector<Vec2> corners() const;
  /// Square bounding box of the points, scaled about its centre.
  static Rect scaled_bounding_square(std::span<const Vec2> points, double scale);
};

/// Kept side is { x : normal . x >= offset }.
struct HalfPlane {
  Vec2 normal;
  double offset;
};

/// Convex polygon whose edge k (vertex k -> k+1) carries labels[k]:
/// the index of the half-plane that produced it, or a negative value for the
/// original boundary.
struct LabeledPolygon {
  std::vector<Vec2> points;
  std::vector<int> labels;
  bool empty() const { return points.size() < 3; }
};

std::vector<Vec2> clip_polygon(std::span<const Vec2> poly, const HalfPlane& half_plane);
LabeledPolygon clip_polygon(const LabeledPolygon& poly, const HalfPlane& half_plane, int label,
                            double tol);

struct AreaCentroid {
  double area = 0.0;
  std::optional<Vec2> centroid;  // empty for zero-area input
};
AreaCentroid cell_area_centroid(std::span<const Vec2> poly);

/// Lower convex hull of lifted points. faces are counter-clockwise in the xy
/// projection; neighbors[i] lists the sites sharing a hull edge with i.
struct LowerHull {
  std::vector<Face> faces;
  std::vector<std::vector<int>> neighbors;
  std::vector<bool> on_hull;
  /// True when all lifted points are coplanar; neighbors is then the complete
  /// graph over the sites and faces a fan over the projected hull.
  bool coplanar = false;
};

LowerHull lower_convex_hull(std::span<const Vec3> points);

struct DualEdge {
  int i = 0;
  int j = 0;
  double length = 0.0;  // length of the shared clipped cell edge
};

/// Power diagram of sites p_i with heights h_i: cell i is the set where
/// <x,p_i> + h_i is maximal, clipped to omega.
struct PowerDiagram {
  Rect omega;
  std::vector<Vec2> sites;
  std::vector<double> heights;
  std::vector<std::vector<Vec2>> cells;  // CCW, empty when the cell is empty
  std::vector<double> areas;
  std::vector<std::optional<Vec2>> centroids;
  std::vector<DualEdge> adjacency;  // i < j, length > 0

  std::size_t size() const { return sites.size(); }
  std::size_t empty_cell_count() const;
};

PowerDiagram power_diagram(std::span<const Vec2> sites, std::span<const double> heights,
                           const Rect& omega);

/// Cells as polygons, sites as dots; coordinates in user units at 1e-6.
void write_power_diagram_svg(const PowerDiagram& pd, std::ostream& out);

}  // namespace tot
