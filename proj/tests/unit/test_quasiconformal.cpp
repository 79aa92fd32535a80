#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "tot/error.hpp"
#include "tot/quasiconformal.hpp"

using namespace tot;

namespace {

Vec2 apply(Complex a, Complex b, Complex c, const Vec2& p) {
  Complex z(p.x(), p.y());
  Complex w = a * z + b * std::conj(z) + c;
  return Vec2(w.real(), w.imag());
}

std::array<Vec2, 3> tri() { return {Vec2(0, 0), Vec2(1, 0), Vec2(0.3, 0.8)}; }

}  // namespace

TEST_CASE("face_beltrami examples") {
  auto s = tri();
  CHECK(std::abs(face_beltrami(s, s)) < 1e-15);

  std::array<Vec2, 3> stretch{Vec2(0, 0), Vec2(2, 0), Vec2(0.6, 0.8)};
  Complex mu = face_beltrami(s, stretch);
  CHECK(mu.real() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(std::abs(mu.imag()) < 1e-15);

  std::array<Vec2, 3> mirror{Vec2(0, 0), Vec2(1, 0), Vec2(0.3, -0.8)};
  Complex r = face_beltrami(s, mirror);
  CHECK(std::isinf(std::abs(r)));
  CHECK(is_sentinel(r));

  std::array<Vec2, 3> flat{Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)};
  CHECK_THROWS_AS(face_beltrami(flat, s), Error);
}

TEST_CASE("face_beltrami matches the analytic coefficient of random affine maps") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    Complex a(u(rng) * 2, u(rng) * 2);
    if (std::abs(a) < 0.2) a += 1.0;
    double rho = 0.95 * std::abs(u(rng));
    Complex b = a * std::polar(rho, 3.14159 * u(rng));
    Complex c(u(rng), u(rng));
    std::array<Vec2, 3> s{Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng))};
    if (std::abs(signed_area_2d(s[0], s[1], s[2])) < 1e-3) continue;
    std::array<Vec2, 3> d{apply(a, b, c, s[0]), apply(a, b, c, s[1]), apply(a, b, c, s[2])};
    CHECK(std::abs(face_beltrami(s, d) - b / a) < 1e-12);
  }
}

TEST_CASE("vertex_beltrami") {
  TriMesh g = fixtures::grid(4);
  std::vector<Complex> c(g.num_faces(), Complex(0.2, -0.1));
  for (const Complex& v : vertex_beltrami(g, c)) CHECK(std::abs(v - Complex(0.2, -0.1)) < 1e-15);

  std::vector<Complex> s(g.num_faces(), Complex(0, 0));
  s[0] = Complex(std::numeric_limits<double>::infinity(), 0);
  auto v = vertex_beltrami(g, s);
  for (int k : g.faces()[0]) CHECK(std::isinf(std::abs(v[k])));
  int flagged = 0;
  for (const Complex& x : v) flagged += std::isinf(std::abs(x));
  CHECK(flagged == 3);

  // Corner vertex 0 of the grid touches exactly faces 0 and 1, of equal area.
  std::vector<Complex> pm(g.num_faces(), Complex(0, 0));
  pm[0] = 0.4;
  pm[1] = -0.4;
  CHECK(std::abs(vertex_beltrami(g, pm)[0]) < 1e-15);

  CHECK_THROWS_AS(vertex_beltrami(g, std::vector<Complex>(3)), Error);
}

TEST_CASE("auxiliary_metric") {
  CHECK(auxiliary_metric(Complex(0.3, 0.4), 0.0) == doctest::Approx(0.5));
  CHECK(auxiliary_metric(Complex(1, 0), 0.5) == doctest::Approx(1.5));
  CHECK(auxiliary_metric(Complex(0, 1), 0.5) == doctest::Approx(0.5));

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    Complex mu = std::polar(0.99 * std::abs(u(rng)), 3.14159 * u(rng));
    Vec2 p(u(rng), u(rng)), q(u(rng), u(rng));
    Vec2 fp = apply(1.0, mu, 0.0, p), fq = apply(1.0, mu, 0.0, q);
    Complex dz(q.x() - p.x(), q.y() - p.y());
    CHECK(std::abs(auxiliary_metric(dz, mu) - (fq - fp).norm()) < 1e-12);
  }
}

TEST_CASE("beltrami_field of the identity and of a stretch") {
  TriMesh g = fixtures::jittered_grid(6, 0.3, 2);
  BeltramiField id = beltrami_field(g, g.positions_2d());
  CHECK(id.max_vertex_magnitude() < 1e-14);
  auto p = g.positions_2d();
  for (auto& q : p) q.x() *= 2.0;
  BeltramiField st = beltrami_field(g, p);
  for (const Complex& m : st.per_vertex) CHECK(std::abs(m - 1.0 / 3.0) < 1e-12);
  std::ostringstream csv;
  write_beltrami_csv(st, csv);
  CHECK(csv.str().rfind("vertex,abs_mu,arg_mu\n", 0) == 0);
}

TEST_CASE("gamma_ring on a regular grid") {
  const int n = 9;
  TriMesh g = fixtures::grid(n);
  int c = fixtures::grid_index(n, 4, 4);
  Patch p1 = gamma_ring(g, c, 1);
  CHECK(p1.boundary_is_loop);
  CHECK(p1.boundary.size() == 6);
  CHECK(p1.interior == std::vector<int>{c});
  CHECK(p1.faces.size() == 6);

  Patch p2 = gamma_ring(g, c, 2);
  CHECK(p2.boundary_is_loop);
  CHECK(p2.boundary.size() == 12);
  CHECK(p2.interior.size() == 7);
  std::set<int> ring1(p1.boundary.begin(), p1.boundary.end());
  for (int v : p2.interior) CHECK((v == c || ring1.count(v)));
  for (int v : p2.boundary) CHECK_FALSE(std::count(p2.interior.begin(), p2.interior.end(), v));
  std::vector<Vec2> loop;
  for (int b : p2.boundary) loop.push_back(g.xy(b));
  double a2 = 0.0;
  for (std::size_t k = 0; k < loop.size(); ++k)
    a2 += loop[k].x() * loop[(k + 1) % loop.size()].y() - loop[k].y() * loop[(k + 1) % loop.size()].x();
  CHECK(a2 > 0.0);

  Patch all = gamma_ring(g, c, 100);
  CHECK(all.vertices.size() == g.num_vertices());
  CHECK(all.faces.size() == g.num_faces());
  CHECK(all.boundary_is_loop);
  CHECK(all.boundary.size() == boundary_loop(g).size());
  CHECK(all.interior.size() == static_cast<std::size_t>((n - 2) * (n - 2)));

  Patch corner = gamma_ring(g, 0, 2);
  CHECK(corner.boundary_is_loop);
  for (int v : corner.interior) CHECK_FALSE(g.is_boundary(v));

  CHECK_THROWS_AS(gamma_ring(g, -1, 2), Error);
  CHECK_THROWS_AS(gamma_ring(g, c, 0), Error);
}

TEST_CASE("is_convex_loop") {
  std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(is_convex_loop(sq));
  std::vector<Vec2> cw(sq.rbegin(), sq.rend());
  CHECK_FALSE(is_convex_loop(cw));
  std::vector<Vec2> collinear{{0, 0}, {0.5, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(is_convex_loop(collinear));
  std::vector<Vec2> dent{{0, 0}, {1, 0}, {0.5, 0.2}, {1, 1}, {0, 1}};
  CHECK_FALSE(is_convex_loop(dent));
  std::vector<Vec2> twice;
  for (int k = 0; k < 10; ++k) {
    double a = 4.0 * std::numbers::pi * k / 10;
    twice.emplace_back(std::cos(a), std::sin(a));
  }
  CHECK_FALSE(is_convex_loop(twice));
}

TEST_CASE("qc_correct leaves a mildly distorted map alone") {
  TriMesh g = fixtures::grid(8);
  auto p = g.positions_2d();
  for (auto& q : p) q.x() *= 1.5;  // |mu| = 0.2
  TriMesh mhat = g.with_positions(p);
  QcResult r = qc_correct(g, mhat, beltrami_field(g, p));
  CHECK(r.patches.empty());
  CHECK(r.mesh.faces() == g.faces());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(r.mesh.xy(static_cast<int>(i)) == p[i]);
}

TEST_CASE("qc_correct removes flips made by reflecting an interior vertex") {
  const int n = 11;
  TriMesh g = fixtures::grid(n);
  auto p = g.positions_2d();
  int c = fixtures::grid_index(n, 5, 5);
  int right = fixtures::grid_index(n, 6, 5);
  p[c] = 2.0 * p[right] - p[c];  // mirrored through its right neighbour
  TriMesh mhat = g.with_positions(p);
  REQUIRE_FALSE(flipped_faces(mhat).empty());
  BeltramiField mu = beltrami_field(g, p);
  QcResult r = qc_correct(g, mhat, mu);
  CHECK(r.mesh.faces() == g.faces());
  CHECK(r.mesh.shared_faces() == g.shared_faces());
  CHECK(flipped_faces(r.mesh).empty());
  CHECK_FALSE(r.skipped_any());
  CHECK(r.field.max_vertex_magnitude() < 1.0);
  // Vertices far from the fold are untouched.
  for (int b : boundary_loop(g)) CHECK(r.mesh.xy(b) == p[b]);
}

TEST_CASE("qc_correct holds patch boundaries bit-exactly") {
  const int n = 13;
  TriMesh g = fixtures::grid(n);
  auto p = g.positions_2d();
  int c = fixtures::grid_index(n, 6, 6);
  p[c] += Vec2(0.25, 0.2);
  TriMesh mhat = g.with_positions(p);
  QcOptions opt;
  opt.max_passes = 1;
  QcResult r = qc_correct(g, mhat, beltrami_field(g, p), opt);
  REQUIRE(r.patches.size() >= 1);
  CHECK(flipped_faces(r.mesh).empty());
  std::set<int> moved;
  for (const QcPatchLog& log : r.patches) {
    Patch patch = gamma_ring(g, log.center, log.gamma);
    moved.insert(patch.interior.begin(), patch.interior.end());
  }
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!moved.count(static_cast<int>(i))) CHECK(r.mesh.xy(static_cast<int>(i)) == p[i]);
}

TEST_CASE("qc_correct on a conformal pair is the identity") {
  TriMesh g = fixtures::jittered_grid(9, 0.25, 12);
  auto p = g.positions_2d();
  Complex a = std::polar(1.7, 0.4);
  for (auto& q : p) q = apply(a, 0.0, Complex(0.1, -0.2), q);
  QcOptions opt;
  opt.eps = 1e-6;  // force every vertex through the correction
  BeltramiField mu = beltrami_field(g, p);
  // Numerical noise keeps |mu| near zero; nudge one vertex field entry so it runs.
  mu.per_vertex[fixtures::grid_index(9, 4, 4)] = 0.5;
  QcResult r = qc_correct(g, g.with_positions(p), mu, opt);
  REQUIRE_FALSE(r.patches.empty());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK((r.mesh.xy(static_cast<int>(i)) - p[i]).norm() < 1e-9);
}

TEST_CASE("qc_correct argument checks") {
  TriMesh g = fixtures::grid(4);
  BeltramiField mu = beltrami_field(g, g.positions_2d());
  QcOptions bad;
  bad.eps = 0.0;
  CHECK_THROWS_AS(qc_correct(g, g, mu, bad), Error);
  TriMesh other = fixtures::grid(5);
  CHECK_THROWS_AS(qc_correct(g, other, mu), Error);
}
