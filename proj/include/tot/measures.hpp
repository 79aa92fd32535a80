#pragma once

#include <functional>
#include <vector>

#include "tot/sdot.hpp"

namespace tot {

/// Divides by the sum; throws when the sum is not positive.
std::vector<double> normalize_measure(std::vector<double> raw);

/// nu_i proportional to the surface vertex area.
MeasureSpec measure_area_preserving(const TriMesh& mesh3d);

/// nu_i = 1/n.
MeasureSpec measure_uniform(std::size_t n);

struct RoiCircle {
  double cx = 0.0, cy = 0.0, r = 0.0, k = 1.0;
};
struct RoiBox {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0, k = 1.0;
};

/// Scalar k(p) of a set of regions: the largest k among the regions that
/// contain p, or 1 outside all of them.
struct RoiSet {
  std::vector<RoiCircle> circles;
  std::vector<RoiBox> boxes;
  double scalar_at(const Vec2& p) const;
  bool empty() const { return circles.empty() && boxes.empty(); }
};

/// nu_i proportional to k(p_i) * a_i with a_i the planar vertex area.
MeasureSpec measure_roi(const TriMesh& mesh2d, const std::function<double(const Vec2&)>& k_of);
MeasureSpec measure_roi(const TriMesh& mesh2d, const RoiSet& rois);

/// nu_i proportional to k * (delta + gray_i) * a_i.
MeasureSpec measure_image(const TriMesh& mesh2d, double k, double delta);

}  // namespace tot
