#include "tot/measures.hpp"

#include <algorithm>
#include <cmath>

#include "tot/error.hpp"

namespace tot {

std::vector<double> normalize_measure(std::vector<double> raw) {
  double sum = 0.0;
  for (double v : raw) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::InvalidArgument, "measure values must be finite and non-negative");
    sum += v;
  }
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidArgument, "measure has zero total mass");
  for (double& v : raw) v /= sum;
  return raw;
}

MeasureSpec measure_area_preserving(const TriMesh& mesh3d) {
  MeasureSpec m;
  m.strategy = MeasureStrategy::Area;
  m.nu = normalize_measure(vertex_areas(mesh3d));
  return m;
}

MeasureSpec measure_uniform(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "uniform measure needs n >= 1");
  MeasureSpec m;
  m.strategy = MeasureStrategy::Uniform;
  m.nu.assign(n, 1.0 / static_cast<double>(n));
  return m;
}

double RoiSet::scalar_at(const Vec2& p) const {
  bool inside = false;
  double k = 0.0;
  for (const RoiCircle& c : circles)
    if ((p - Vec2(c.cx, c.cy)).norm() <= c.r) {
      k = inside ? std::max(k, c.k) : c.k;
      inside = true;
    }
  for (const RoiBox& b : boxes)
    if (p.x() >= b.xmin && p.x() <= b.xmax && p.y() >= b.ymin && p.y() <= b.ymax) {
      k = inside ? std::max(k, b.k) : b.k;
      inside = true;
    }
  return inside ? k : 1.0;
}

MeasureSpec measure_roi(const TriMesh& mesh2d, const std::function<double(const Vec2&)>& k_of) {
  std::vector<double> a = vertex_areas(mesh2d);
  for (std::size_t i = 0; i < a.size(); ++i) {
    double k = k_of(mesh2d.xy(static_cast<int>(i)));
    if (!(k >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ROI scalar must be non-negative");
    a[i] *= k;
  }
  MeasureSpec m;
  m.strategy = MeasureStrategy::Roi;
  m.nu = normalize_measure(std::move(a));
  return m;
}

MeasureSpec measure_roi(const TriMesh& mesh2d, const RoiSet& rois) {
  MeasureSpec m = measure_roi(mesh2d, [&](const Vec2& p) { return rois.scalar_at(p); });
  m.parameters["circles"] = static_cast<double>(rois.circles.size());
  m.parameters["boxes"] = static_cast<double>(rois.boxes.size());
  return m;
}

MeasureSpec measure_image(const TriMesh& mesh2d, double k, double delta) {
  if (!mesh2d.has_gray()) throw Error(ErrorCode::InvalidArgument, "image measure needs a gray channel");
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  std::vector<double> a = vertex_areas(mesh2d);
  const auto& gray = *mesh2d.gray();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= k * (delta + gray[i]);
  MeasureSpec m;
  m.strategy = MeasureStrategy::Image;
  m.nu = normalize_measure(std::move(a));
  m.parameters["k"] = k;
  m.parameters["delta"] = delta;
  return m;
}

}  // namespace tot
