#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "tot/geometry.hpp"
#include "tot/image.hpp"
#include "tot/mesh.hpp"

namespace tot {

/// Wireframe of a planar mesh; flipped faces are filled red.
void write_mesh_svg(const TriMesh& mesh2d, std::ostream& out);

/// Vertex polylines over a final-frame wireframe.
void write_trajectory_svg(const std::vector<std::vector<Vec2>>& paths, const TriMesh& final_mesh,
                          std::ostream& out);

/// Axis-aligned bounds of a planar mesh.
Rect mesh_bounds(const TriMesh& mesh2d);

/// Image of src under the piecewise-linear map taking `from` onto `to`
/// (same connectivity). Every output pixel inside a triangle of `to` is
/// pulled back by barycentric coordinates and sampled bilinearly from src,
/// whose pixel grid covers the rectangle of image_half_extent. Pixels
/// outside `to` get `background`. The output covers `view`.
GrayImage warp_image(const GrayImage& src, const TriMesh& from, const TriMesh& to, const Rect& view,
                     int width, int height, double background = 0.0);

/// Quad mesh OBJ from a grid triangulation whose faces 2k and 2k+1 share a
/// diagonal. Throws when the pairing does not hold.
void save_quad_obj(const TriMesh& mesh, const std::filesystem::path& path);

}  // namespace tot
