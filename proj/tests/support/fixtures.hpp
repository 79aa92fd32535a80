#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tot/image.hpp"
#include "tot/mesh.hpp"

namespace fixtures {

using tot::Face;
using tot::TriMesh;
using tot::Vec2;
using tot::Vec3;

/// n x n vertex grid on [-half, half]^2, same layout as image_to_mesh.
inline TriMesh grid(int n, double half = 1.0) {
  std::vector<Vec2> v;
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      v.emplace_back(-half + 2.0 * half * a / (n - 1), -half + 2.0 * half * b / (n - 1));
  std::vector<Face> f;
  for (int b = 0; b + 1 < n; ++b)
    for (int a = 0; a + 1 < n; ++a) {
      int v00 = b * n + a, v10 = v00 + 1, v01 = v00 + n, v11 = v01 + 1;
      f.push_back({v00, v10, v11});
      f.push_back({v00, v11, v01});
    }
  return TriMesh::create_2d(v, std::move(f));
}

inline int grid_index(int n, int a, int b) { return b * n + a; }

/// Unit hemisphere z >= 0 as a disk: a pole and `rings` latitude rings.
inline TriMesh hemisphere(int rings, int sectors) {
  std::vector<Vec3> v{Vec3(0, 0, 1)};
  for (int r = 1; r <= rings; ++r) {
    double theta = 0.5 * std::numbers::pi * r / rings;
    for (int s = 0; s < sectors; ++s) {
      double phi = 2.0 * std::numbers::pi * s / sectors;
      v.emplace_back(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    }
  }
  auto idx = [&](int r, int s) { return 1 + (r - 1) * sectors + (s % sectors); };
  std::vector<Face> f;
  for (int s = 0; s < sectors; ++s) f.push_back({0, idx(1, s), idx(1, s + 1)});
  for (int r = 1; r < rings; ++r)
    for (int s = 0; s < sectors; ++s) {
      f.push_back({idx(r, s), idx(r + 1, s), idx(r + 1, s + 1)});
      f.push_back({idx(r, s), idx(r + 1, s + 1), idx(r, s + 1)});
    }
  return TriMesh::create(std::move(v), std::move(f), 3);
}

/// Planar grid with random interior jitter of up to `amount` cell widths.
inline TriMesh jittered_grid(int n, double amount, unsigned seed) {
  TriMesh g = grid(n);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec2> p = g.positions_2d();
  double h = 2.0 / (n - 1);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!g.is_boundary(static_cast<int>(i))) p[i] += amount * h * Vec2(u(rng), u(rng));
  return g.with_positions(p);
}

/// Two Gaussian blobs, white on black (black on white with dark_blobs).
inline tot::GrayImage two_blob_image(int size, bool dark_blobs = false) {
  tot::GrayImage img;
  img.width = img.height = size;
  img.pixels.resize(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double u = -1.0 + 2.0 * x / (size - 1), v = 1.0 - 2.0 * y / (size - 1);
      double g = std::exp(-((u + 0.45) * (u + 0.45) + (v - 0.35) * (v - 0.35)) / 0.04) +
                 std::exp(-((u - 0.4) * (u - 0.4) + (v + 0.4) * (v + 0.4)) / 0.06);
      g = std::min(g, 1.0);
      img.at(x, y) = dark_blobs ? 1.0 - g : g;
    }
  return img;
}

inline std::vector<Vec2> random_sites(std::mt19937& rng, int n, double half = 1.0) {
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<Vec2> s;
  for (int i = 0; i < n; ++i) s.emplace_back(u(rng), u(rng));
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tot_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
