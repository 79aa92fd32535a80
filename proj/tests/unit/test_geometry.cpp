#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "fixtures.hpp"
#include "tot/error.hpp"
#include "tot/geometry.hpp"

using namespace tot;

namespace {

std::vector<Vec2> square01() { return {{0, 0}, {1, 0}, {1, 1}, {0, 1}}; }

double poly_area(const std::vector<Vec2>& p) { return cell_area_centroid(p).area; }

std::vector<double> voronoi_heights(const std::vector<Vec2>& s) {
  std::vector<double> h;
  for (const Vec2& p : s) h.push_back(-0.5 * p.squaredNorm());
  return h;
}

}  // namespace

TEST_CASE("clip_polygon") {
  auto half = clip_polygon(square01(), HalfPlane{Vec2(1, 0), 0.5});
  CHECK(poly_area(half) == doctest::Approx(0.5));
  for (const Vec2& p : half) CHECK(p.x() >= 0.5 - 1e-15);

  auto same = clip_polygon(square01(), HalfPlane{Vec2(1, 0), -3.0});
  CHECK(same.size() == 4);
  CHECK(poly_area(same) == doctest::Approx(1.0));

  CHECK(clip_polygon(square01(), HalfPlane{Vec2(1, 0), 2.0}).empty());

  auto tri = clip_polygon(square01(), HalfPlane{Vec2(-1, -1), -1.0});
  CHECK(poly_area(tri) == doctest::Approx(0.5));
}

TEST_CASE("labelled clipping records which half-plane produced each edge") {
  LabeledPolygon sq{square01(), {-1, -1, -1, -1}};
  LabeledPolygon c = clip_polygon(sq, HalfPlane{Vec2(1, 0), 0.25}, 7, 1e-12);
  REQUIRE(c.points.size() == 4);
  int sevens = static_cast<int>(std::count(c.labels.begin(), c.labels.end(), 7));
  CHECK(sevens == 1);
  for (std::size_t k = 0; k < c.points.size(); ++k)
    if (c.labels[k] == 7) {
      CHECK(c.points[k].x() == doctest::Approx(0.25));
      CHECK(c.points[(k + 1) % c.points.size()].x() == doctest::Approx(0.25));
    }
}

TEST_CASE("cell_area_centroid") {
  auto sq = cell_area_centroid(square01());
  CHECK(sq.area == doctest::Approx(1.0));
  REQUIRE(sq.centroid);
  CHECK(sq.centroid->x() == doctest::Approx(0.5));
  CHECK(sq.centroid->y() == doctest::Approx(0.5));

  std::vector<Vec2> t{{0, 0}, {1, 0}, {0, 1}};
  auto tr = cell_area_centroid(t);
  CHECK(tr.area == doctest::Approx(0.5));
  CHECK(tr.centroid->x() == doctest::Approx(1.0 / 3));
  CHECK(tr.centroid->y() == doctest::Approx(1.0 / 3));

  auto e = cell_area_centroid(std::vector<Vec2>{});
  CHECK(e.area == 0.0);
  CHECK_FALSE(e.centroid);
}

TEST_CASE("lower_convex_hull") {
  std::vector<Vec3> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  LowerHull h3 = lower_convex_hull(three);
  REQUIRE(h3.faces.size() == 1);
  CHECK(signed_area_2d(three[h3.faces[0][0]].head<2>(), three[h3.faces[0][1]].head<2>(),
                       three[h3.faces[0][2]].head<2>()) > 0);

  // The interior point lifted above the plane of the others is not on the lower hull.
  std::vector<Vec3> four{{0, 0, 0}, {2, 0, 0}, {0, 2, 0}, {0.5, 0.5, 1.0}};
  LowerHull h4 = lower_convex_hull(four);
  CHECK(h4.faces.size() == 1);
  CHECK_FALSE(h4.on_hull[3]);
  CHECK(h4.neighbors[3].empty());

  // Lifted below: it splits the triangle into three.
  four[3].z() = -1.0;
  LowerHull h4b = lower_convex_hull(four);
  CHECK(h4b.faces.size() == 3);
  CHECK(h4b.neighbors[3].size() == 3);

  // Coplanar lift.
  std::vector<Vec3> flat{{0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}, {0.5, 0.5, 1}};
  LowerHull hf = lower_convex_hull(flat);
  CHECK(hf.coplanar);
  for (const Face& f : hf.faces)
    CHECK(signed_area_2d(flat[f[0]].head<2>(), flat[f[1]].head<2>(), flat[f[2]].head<2>()) > 0);

  std::vector<Vec3> line{{0, 0, 0}, {1, 0, 1}, {2, 0, 3}};
  CHECK_THROWS_AS(lower_convex_hull(line), Error);
  CHECK_THROWS_AS(lower_convex_hull(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}}), Error);
}

TEST_CASE("lower hull of a paraboloid lift is the Delaunay triangulation") {
  std::mt19937 rng(11);
  auto sites = fixtures::random_sites(rng, 40);
  std::vector<Vec3> lift;
  for (const Vec2& p : sites) lift.emplace_back(p.x(), p.y(), p.squaredNorm());
  LowerHull h = lower_convex_hull(lift);
  // Empty circumcircle property.
  for (const Face& f : h.faces) {
    Eigen::Matrix2d A;
    Vec2 a = sites[f[0]], b = sites[f[1]], c = sites[f[2]];
    A.row(0) = 2 * (b - a);
    A.row(1) = 2 * (c - a);
    Vec2 rhs(b.squaredNorm() - a.squaredNorm(), c.squaredNorm() - a.squaredNorm());
    Vec2 center = A.fullPivLu().solve(rhs);
    double r2 = (a - center).squaredNorm();
    for (std::size_t i = 0; i < sites.size(); ++i)
      CHECK((sites[i] - center).squaredNorm() >= r2 * (1 - 1e-9));
  }
  // Every paraboloid-lifted site is a lower hull vertex.
  for (bool on : h.on_hull) CHECK(on);
}

TEST_CASE("two-site power diagrams") {
  std::vector<Vec2> s{{-0.5, 0}, {0.5, 0}};
  Rect omega = Rect::make(-1, 1, -1, 1);
  PowerDiagram pd = power_diagram(s, std::vector<double>{0, 0}, omega);
  CHECK(pd.areas[0] == doctest::Approx(2.0));
  CHECK(pd.areas[1] == doctest::Approx(2.0));
  REQUIRE(pd.adjacency.size() == 1);
  CHECK(pd.adjacency[0].length == doctest::Approx(2.0));

  // Cell 0 wins where -0.5x + h0 >= 0.5x + h1, i.e. x <= h0 - h1.
  PowerDiagram shifted = power_diagram(s, std::vector<double>{0.2, 0}, omega);
  CHECK(shifted.areas[0] == doctest::Approx(2.4));
  CHECK(shifted.areas[1] == doctest::Approx(1.6));
  for (const Vec2& p : shifted.cells[0]) CHECK(p.x() <= 0.2 + 1e-12);
  CHECK(shifted.centroids[0]->x() == doctest::Approx(-0.4));
  CHECK(shifted.centroids[1]->x() == doctest::Approx(0.6));

  PowerDiagram one = power_diagram(std::vector<Vec2>{{0.3, 0.1}}, std::vector<double>{0.0}, omega);
  CHECK(one.areas[0] == doctest::Approx(4.0));
  CHECK(one.cells[0].size() == 4);

  std::vector<Vec2> dup{{0.1, 0.1}, {0.2, 0.3}, {0.1, 0.1}};
  try {
    power_diagram(dup, std::vector<double>(3, 0.0), omega);
    FAIL("duplicate sites accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateSites);
  }
}

TEST_CASE("a site can have an empty cell") {
  std::vector<Vec2> s{{-0.5, 0}, {0.5, 0}, {0.0, 0.0}};
  Rect omega = Rect::make(-1, 1, -1, 1);
  PowerDiagram pd = power_diagram(s, std::vector<double>{0, 0, -1.0}, omega);
  CHECK(pd.areas[2] == 0.0);
  CHECK(pd.cells[2].empty());
  CHECK_FALSE(pd.centroids[2]);
  CHECK(pd.empty_cell_count() == 1);
  CHECK(pd.areas[0] + pd.areas[1] == doctest::Approx(4.0));
  for (const DualEdge& e : pd.adjacency) CHECK((e.i != 2 && e.j != 2));
}

TEST_CASE("partition, dominance, symmetry and shift invariance on random diagrams") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uh(-0.3, 0.3);
  Rect omega = Rect::make(-1.2, 1.2, -1.2, 1.2);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 3 + trial % 40;
    auto sites = fixtures::random_sites(rng, n);
    std::vector<double> h(n);
    for (double& x : h) x = uh(rng);
    PowerDiagram pd = power_diagram(sites, h, omega);
    double total = 0.0;
    for (double a : pd.areas) total += a;
    CHECK(std::abs(total - omega.area()) < 1e-9 * omega.area());

    for (int i = 0; i < n; ++i)
      for (const Vec2& x : pd.cells[i])
        for (int j = 0; j < n; ++j)
          CHECK(x.dot(sites[i]) + h[i] >= x.dot(sites[j]) + h[j] - 1e-9);

    for (int i = 0; i < n; ++i)
      if (!pd.cells[i].empty()) {
        const auto& c = pd.cells[i];
        for (std::size_t k = 0; k < c.size(); ++k)
          CHECK(signed_area_2d(c[k], c[(k + 1) % c.size()], c[(k + 2) % c.size()]) >= -1e-12);
      }

    for (const DualEdge& e : pd.adjacency) {
      CHECK(e.i < e.j);
      CHECK(e.length > 0.0);
    }

    std::vector<double> h2 = h;
    for (double& x : h2) x += 0.37;
    PowerDiagram pd2 = power_diagram(sites, h2, omega);
    for (int i = 0; i < n; ++i) CHECK(std::abs(pd2.areas[i] - pd.areas[i]) < 1e-12);
  }
}

TEST_CASE("Voronoi diagram matches nearest-site sampling") {
  std::mt19937 rng(99);
  Rect omega = Rect::make(-1, 1, -1, 1);
  auto sites = fixtures::random_sites(rng, 20);
  PowerDiagram pd = power_diagram(sites, voronoi_heights(sites), omega);
  const int samples = 200000;
  std::vector<int> count(sites.size(), 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < samples; ++k) {
    Vec2 x(u(rng), u(rng));
    int best = 0;
    for (std::size_t i = 1; i < sites.size(); ++i)
      if ((x - sites[i]).squaredNorm() < (x - sites[best]).squaredNorm()) best = static_cast<int>(i);
    ++count[best];
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    double p = pd.areas[i] / omega.area();
    double sigma = std::sqrt(p * (1 - p) / samples);
    CHECK(std::abs(static_cast<double>(count[i]) / samples - p) <= 4 * sigma + 1e-12);
  }
}

TEST_CASE("collinear and few sites fall back to direct clipping") {
  Rect omega = Rect::make(-1, 1, -1, 1);
  std::vector<Vec2> line{{-0.5, 0}, {0, 0}, {0.5, 0}};
  PowerDiagram pd = power_diagram(line, voronoi_heights(line), omega);
  CHECK(pd.areas[0] == doctest::Approx(1.5));
  CHECK(pd.areas[1] == doctest::Approx(1.0));
  CHECK(pd.areas[2] == doctest::Approx(1.5));
  CHECK(pd.adjacency.size() == 2);
}

TEST_CASE("Rect helpers") {
  CHECK_THROWS_AS(Rect::make(1, 0, 0, 1), Error);
  std::vector<Vec2> pts{{-1, -0.5}, {1, 0.5}};
  Rect r = Rect::scaled_bounding_square(pts, 1.2);
  CHECK(r.xmin == doctest::Approx(-1.2));
  CHECK(r.xmax == doctest::Approx(1.2));
  CHECK(r.ymin == doctest::Approx(-1.2));
  CHECK(r.ymax == doctest::Approx(1.2));
  auto c = r.corners();
  CHECK(c.size() == 4);
  CHECK(c[0].x() == doctest::Approx(-1.2));
}

TEST_CASE("power diagram SVG is deterministic and mirror symmetric for symmetric sites") {
  std::vector<Vec2> s{{-0.5, 0}, {0.5, 0}};
  Rect omega = Rect::make(-1, 1, -1, 1);
  PowerDiagram pd = power_diagram(s, std::vector<double>{0, 0}, omega);
  std::ostringstream a, b;
  write_power_diagram_svg(pd, a);
  write_power_diagram_svg(pd, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("<svg") == 0);
  // The two cells are mirror images: same polygon areas and mirrored centroids.
  CHECK(pd.centroids[0]->x() == doctest::Approx(-pd.centroids[1]->x()));
  CHECK(pd.areas[0] == doctest::Approx(pd.areas[1]));
}
