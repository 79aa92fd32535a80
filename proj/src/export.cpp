#include "tot/export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "tot/error.hpp"

namespace tot {

namespace {

void svg_open(const Rect& r, std::ostream& out) {
  double w = r.xmax - r.xmin, h = r.ymax - r.ymin;
  out << std::fixed << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << r.xmin << ' ' << -r.ymax << ' ' << w
      << ' ' << h << "\">\n";
  out << "<rect x=\"" << r.xmin << "\" y=\"" << -r.ymax << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\"/>\n";
}

Rect padded(const Rect& r) {
  double pad = 0.02 * std::max(r.xmax - r.xmin, r.ymax - r.ymin);
  return Rect{r.xmin - pad, r.xmax + pad, r.ymin - pad, r.ymax + pad};
}

void svg_faces(const TriMesh& mesh, double stroke, const char* color, std::ostream& out) {
  for (const Face& f : mesh.faces()) {
    Vec2 a = mesh.xy(f[0]), b = mesh.xy(f[1]), c = mesh.xy(f[2]);
    bool flipped = signed_area_2d(a, b, c) <= 0.0;
    out << "<polygon fill=\"" << (flipped ? "red" : "none") << "\" stroke=\"" << color
        << "\" stroke-width=\"" << stroke << "\" points=\"" << a.x() << ',' << -a.y() << ' ' << b.x()
        << ',' << -b.y() << ' ' << c.x() << ',' << -c.y() << "\"/>\n";
  }
}

}  // namespace

Rect mesh_bounds(const TriMesh& mesh) {
  if (mesh.num_vertices() == 0) throw Error(ErrorCode::InvalidArgument, "empty mesh");
  Rect r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    Vec2 p = mesh.xy(static_cast<int>(i));
    r.xmin = std::min(r.xmin, p.x());
    r.xmax = std::max(r.xmax, p.x());
    r.ymin = std::min(r.ymin, p.y());
    r.ymax = std::max(r.ymax, p.y());
  }
  return r;
}

void write_mesh_svg(const TriMesh& mesh, std::ostream& out) {
  Rect r = padded(mesh_bounds(mesh));
  double stroke = 0.001 * std::max(r.xmax - r.xmin, r.ymax - r.ymin);
  svg_open(r, out);
  svg_faces(mesh, stroke, "black", out);
  out << "</svg>\n";
}

void write_trajectory_svg(const std::vector<std::vector<Vec2>>& paths, const TriMesh& final_mesh,
                          std::ostream& out) {
  Rect r = mesh_bounds(final_mesh);
  for (const auto& path : paths)
    for (const Vec2& p : path) {
      r.xmin = std::min(r.xmin, p.x());
      r.xmax = std::max(r.xmax, p.x());
      r.ymin = std::min(r.ymin, p.y());
      r.ymax = std::max(r.ymax, p.y());
    }
  r = padded(r);
  double stroke = 0.001 * std::max(r.xmax - r.xmin, r.ymax - r.ymin);
  svg_open(r, out);
  svg_faces(final_mesh, stroke, "#999999", out);
  for (const auto& path : paths) {
    if (path.size() < 2) continue;
    out << "<polyline fill=\"none\" stroke=\"blue\" stroke-width=\"" << stroke << "\" points=\"";
    for (std::size_t k = 0; k < path.size(); ++k)
      out << (k ? " " : "") << path[k].x() << ',' << -path[k].y();
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

GrayImage warp_image(const GrayImage& src, const TriMesh& from, const TriMesh& to, const Rect& view,
                     int width, int height, double background) {
  if (src.empty()) throw Error(ErrorCode::InvalidArgument, "empty source image");
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "output size must be positive");
  if (from.faces() != to.faces()) throw Error(ErrorCode::InvalidArgument, "meshes differ in connectivity");
  GrayImage out;
  out.width = width;
  out.height = height;
  out.pixels.assign(static_cast<std::size_t>(width) * height, background);
  Vec2 half = image_half_extent(src.width, src.height);
  double dx = (view.xmax - view.xmin) / width, dy = (view.ymax - view.ymin) / height;

  // Rasterise each target triangle over the pixel centres it covers.
  for (const Face& f : to.faces()) {
    Vec2 a = to.xy(f[0]), b = to.xy(f[1]), c = to.xy(f[2]);
    double area = signed_area_2d(a, b, c);
    if (!(area > 0.0)) continue;
    double xlo = std::min({a.x(), b.x(), c.x()}), xhi = std::max({a.x(), b.x(), c.x()});
    double ylo = std::min({a.y(), b.y(), c.y()}), yhi = std::max({a.y(), b.y(), c.y()});
    int c0 = std::max(0, static_cast<int>(std::floor((xlo - view.xmin) / dx - 0.5)));
    int c1 = std::min(width - 1, static_cast<int>(std::ceil((xhi - view.xmin) / dx - 0.5)));
    int r0 = std::max(0, static_cast<int>(std::floor((view.ymax - yhi) / dy - 0.5)));
    int r1 = std::min(height - 1, static_cast<int>(std::ceil((view.ymax - ylo) / dy - 0.5)));
    Vec2 pa = from.xy(f[0]), pb = from.xy(f[1]), pc = from.xy(f[2]);
    const double tol = -1e-12;
    for (int row = r0; row <= r1; ++row)
      for (int col = c0; col <= c1; ++col) {
        Vec2 q(view.xmin + (col + 0.5) * dx, view.ymax - (row + 0.5) * dy);
        double l0 = signed_area_2d(q, b, c) / area;
        double l1 = signed_area_2d(a, q, c) / area;
        double l2 = 1.0 - l0 - l1;
        if (l0 < tol || l1 < tol || l2 < tol) continue;
        Vec2 s = l0 * pa + l1 * pb + l2 * pc;
        double u = (s.x() + half.x()) / (2.0 * half.x()) * (src.width - 1);
        double v = (1.0 - (s.y() + half.y()) / (2.0 * half.y())) * (src.height - 1);
        out.at(col, row) = src.sample(u, v);
      }
  }
  return out;
}

void save_quad_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  const auto& faces = mesh.faces();
  if (faces.size() % 2 != 0) throw Error(ErrorCode::InvalidArgument, "odd face count, not a paired grid");
  std::vector<std::array<int, 4>> quads;
  quads.reserve(faces.size() / 2);
  for (std::size_t k = 0; k < faces.size(); k += 2) {
    const Face& s = faces[k];
    const Face& t = faces[k + 1];
    // s = {a, b, c}, t = {a, c, d} gives the quad a b c d.
    if (s[0] != t[0] || s[2] != t[1])
      throw Error(ErrorCode::InvalidArgument, "faces " + std::to_string(k) + " and " +
                                                  std::to_string(k + 1) + " do not form a quad");
    quads.push_back({s[0], s[1], s[2], t[2]});
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& q : quads)
    out << "f " << q[0] + 1 << ' ' << q[1] + 1 << ' ' << q[2] + 1 << ' ' << q[3] + 1 << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace tot
