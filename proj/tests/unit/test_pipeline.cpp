#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "tot/error.hpp"
#include "tot/pipeline.hpp"

using namespace tot;

namespace {

TotConfig image_config(double k, double delta) {
  TotConfig cfg;
  cfg.measure.strategy = MeasureStrategy::Image;
  cfg.measure.k = k;
  cfg.measure.delta = delta;
  return cfg;
}

// Area covered by faces whose three vertices are brighter than the threshold.
double bright_area(const TriMesh& shape, const TriMesh& gray_mesh, double threshold) {
  const auto& g = *gray_mesh.gray();
  double a = 0.0;
  for (std::size_t f = 0; f < shape.num_faces(); ++f) {
    const Face& t = shape.faces()[f];
    if (g[t[0]] > threshold && g[t[1]] > threshold && g[t[2]] > threshold) a += face_area(shape, static_cast<int>(f));
  }
  return a;
}

}  // namespace

TEST_CASE("config validation and domain names") {
  TotConfig ok;
  CHECK_NOTHROW(ok.validate());
  auto expect_config_error = [](TotConfig c) {
    try {
      c.validate();
      FAIL("accepted an invalid config");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Config);
    }
  };
  TotConfig c = ok;
  c.eps_tol = 0.0;
  expect_config_error(c);
  c = ok;
  c.eps_distortion = 1.5;
  expect_config_error(c);
  c = ok;
  c.omega_scale = 1.0;
  expect_config_error(c);
  c = ok;
  c.gamma = 0;
  expect_config_error(c);
  c = ok;
  c.measure.delta = 0.0;
  expect_config_error(c);
  c = ok;
  c.measure.rois.circles.push_back({0, 0, -1, 2});
  expect_config_error(c);

  CHECK(parse_domain_shape("disk") == DomainShape::Disk);
  CHECK(parse_domain_shape(to_string(DomainShape::Square)) == DomainShape::Square);
  CHECK_THROWS_AS(parse_domain_shape("circle"), Error);
}

TEST_CASE("diagnostics") {
  std::vector<double> nu{0.25, 0.25, 0.25, 0.25};
  DensityDiagnostics same = diagnostics(nu, nu);
  for (double p : same.psi) CHECK(p == 1.0);
  CHECK(same.rho_max == 0.0);
  CHECK(same.undefined_psi == 0);

  std::vector<double> omega{0.5, 0.25, 0.25, 0.0};
  DensityDiagnostics d = diagnostics(nu, omega, 4);
  CHECK(std::isnan(d.psi[3]));
  CHECK(d.rho[3] == 0.25);
  CHECK(d.psi[0] == 0.5);
  CHECK(d.rho_max == 0.25);
  CHECK(d.rho_mean == doctest::Approx(0.125));
  CHECK(d.undefined_psi == 1);
  CHECK(d.psi_min == 0.5);
  CHECK(d.psi_max == 1.0);
  CHECK(d.rho_histogram.size() == 4);
  CHECK(std::accumulate(d.rho_histogram.begin(), d.rho_histogram.end(), std::size_t{0}) == 4);

  std::ostringstream out;
  write_density_csv(nu, omega, d, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "vertex,nu,omega,rho,psi");
  std::string last;
  while (std::getline(in, line)) last = line;
  CHECK(last.back() == ',');
}

TEST_CASE("uniform measure on a uniform grid skips the correction") {
  TriMesh g = fixtures::grid(11);
  TotConfig cfg;
  cfg.measure.strategy = MeasureStrategy::Uniform;
  TotResult r = t_ot(g, cfg);
  CHECK(r.converged());
  CHECK_FALSE(r.qc.has_value());
  CHECK(r.mu_raw.max_vertex_magnitude() <= cfg.eps_distortion);
  CHECK(r.mhat.faces() == g.faces());
  CHECK(r.flips_final == 0);
  CHECK(r.density.rho_max <= cfg.eps_tol);
  // Interior vertices barely move.
  double interior = 0.0;
  for (std::size_t i = 0; i < g.num_vertices(); ++i)
    if (!g.is_boundary(static_cast<int>(i)))
      interior = std::max(interior, (r.mhat.xy(static_cast<int>(i)) - g.xy(static_cast<int>(i))).norm());
  CHECK(interior < 0.2);
}

TEST_CASE("two-blob image measure") {
  TriMesh m = image_to_mesh(fixtures::two_blob_image(64), 30);
  TotConfig cfg = image_config(4.0, 0.02);
  TotResult r = t_ot(m, cfg);
  REQUIRE(r.converged());
  CHECK(r.transport.state.grad_norm < 1e-5);
  CHECK(r.density.rho_max <= r.transport.state.grad_norm);
  CHECK(r.mhat.faces() == m.faces());
  CHECK(r.mhat.shared_faces() == m.shared_faces());
  CHECK(r.flips_final == 0);
  CHECK(flipped_faces(r.mhat).empty());
  CHECK(bright_area(r.mhat, m, 0.5) > 1.5 * bright_area(m, m, 0.5));
  CHECK(std::abs(std::accumulate(r.transport.omega.begin(), r.transport.omega.end(), 0.0) - 1.0) < 1e-9);
}

TEST_CASE("larger delta lets dark regions shrink less") {
  TriMesh m = image_to_mesh(fixtures::two_blob_image(48, true), 20);
  auto dark_area = [&](double delta) {
    TotResult r = t_ot(m, image_config(1.0, delta));
    REQUIRE(r.converged());
    CHECK(r.flips_final == 0);
    double total = 0.0;
    for (std::size_t f = 0; f < r.mhat.num_faces(); ++f) total += face_area(r.mhat, static_cast<int>(f));
    // Dark faces: every vertex below 0.5.
    double dark = 0.0;
    const auto& g = *m.gray();
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
      const Face& t = m.faces()[f];
      if (g[t[0]] < 0.5 && g[t[1]] < 0.5 && g[t[2]] < 0.5) dark += face_area(r.mhat, static_cast<int>(f));
    }
    return dark / total;
  };
  CHECK(dark_area(0.25) > dark_area(0.05));
}

TEST_CASE("surface input goes through the parameterization") {
  TriMesh h = fixtures::hemisphere(8, 32);
  for (DomainShape shape : {DomainShape::Disk, DomainShape::Square}) {
    TotConfig cfg;
    cfg.domain = shape;
    TotResult r = t_ot(h, cfg);
    CHECK(r.m0.dim() == 2);
    CHECK(r.converged());
    CHECK(r.mhat.faces() == h.faces());
    CHECK(r.flips_final == 0);
    CHECK(flipped_faces(r.m0).empty());
  }
}

TEST_CASE("correct_frame repairs a fold") {
  const int n = 9;
  TriMesh g = fixtures::grid(n);
  auto p = g.positions_2d();
  int c = fixtures::grid_index(n, 4, 4);
  p[c] = 2.0 * p[fixtures::grid_index(n, 5, 4)] - p[c];
  CorrectedFrame f = correct_frame(g, p, TotConfig{});
  CHECK(f.flips_raw > 0);
  CHECK(f.flips_final == 0);
  REQUIRE(f.qc.has_value());
  CHECK(f.mesh.faces() == g.faces());
}

TEST_CASE("tt_ot frames") {
  TriMesh m = image_to_mesh(fixtures::two_blob_image(40), 16);
  TotConfig cfg = image_config(1.0, 0.1);
  TemporalSequence seq = tt_ot(m, cfg);
  const TotResult& r = seq.result;
  REQUIRE(r.converged());
  CHECK(seq.frames.size() == static_cast<std::size_t>(r.transport.state.iter) + 1);
  CHECK(seq.frames.front().t == 0.0);
  CHECK(seq.frames.front().grad_norm == doctest::Approx(r.transport.log.front().grad_norm).epsilon(1e-12));
  CHECK(seq.frames.back().rho_max <= cfg.eps_tol);
  CHECK(seq.frames.back().t == 1.0);
  for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(seq.frames.front().mesh.xy(static_cast<int>(i)) == m.xy(static_cast<int>(i)));

  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const TemporalFrame& f = seq.frames[k];
    CHECK(f.mesh.faces() == m.faces());
    CHECK(f.flips == 0);
    CHECK(flipped_faces(f.mesh).empty());
    CHECK(f.rho_max <= f.grad_norm);
    if (k > 0) {
      CHECK(f.t > seq.frames[k - 1].t);
      CHECK(f.grad_norm < seq.frames[k - 1].grad_norm);
    }
  }

  TotResult single = t_ot(m, cfg);
  const TriMesh& last = seq.frames.back().mesh;
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    CHECK((last.xy(static_cast<int>(i)) - single.mhat.xy(static_cast<int>(i))).norm() <= 1e-9);
    CHECK(r.mhat.xy(static_cast<int>(i)) == single.mhat.xy(static_cast<int>(i)));
  }

  auto traj = seq.trajectories();
  CHECK(traj.size() == m.num_vertices());
  for (const auto& line : traj) CHECK(line.size() == seq.frames.size());

  const double c = static_cast<double>(m.num_vertices()) * cfg.eps_tol;
  for (double psi : seq.frames.back().psi)
    if (!std::isnan(psi)) CHECK(std::abs(psi - 1.0) <= c);
}

TEST_CASE("runs are deterministic") {
  TriMesh m = image_to_mesh(fixtures::two_blob_image(32), 12);
  TotConfig cfg = image_config(4.0, 0.02);
  TotResult a = t_ot(m, cfg), b = t_ot(m, cfg);
  for (std::size_t i = 0; i < m.num_vertices(); ++i) CHECK(a.mhat.xy(static_cast<int>(i)) == b.mhat.xy(static_cast<int>(i)));
  CHECK(a.transport.log.size() == b.transport.log.size());
}
