#pragma once

#include <filesystem>
#include <vector>

#include "tot/mesh.hpp"

namespace tot {

/// Row-major grayscale raster, values in [0,1]. Row 0 is the top row.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return width <= 0 || height <= 0 || pixels.empty(); }

  /// Bilinear sample at continuous pixel coordinates (pixel centres are integers),
  /// clamped at the border.
  double sample(double u, double v) const;
};

/// PNG (8/16-bit gray, RGB, RGBA) or binary/ASCII PGM/PPM. Color is reduced
/// to Rec.601 luminance.
GrayImage load_image(const std::filesystem::path& path);
void save_png(const GrayImage& image, const std::filesystem::path& path);

/// Half extents of the grid rectangle used by image_to_mesh: the longer image
/// side spans [-1,1].
Vec2 image_half_extent(int width, int height);

/// Regular n x n grid over the aspect-corrected rectangle, each cell split
/// along its lower-left to upper-right diagonal. Faces 2k and 2k+1 come from
/// the same grid cell.
TriMesh image_to_mesh(const GrayImage& image, int n);

}  // namespace tot
