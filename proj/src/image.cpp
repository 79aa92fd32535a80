#include "tot/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "tot/error.hpp"

namespace tot {

double GrayImage::sample(double u, double v) const {
  u = std::clamp(u, 0.0, static_cast<double>(width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(height - 1));
  int x0 = std::min(static_cast<int>(std::floor(u)), std::max(width - 2, 0));
  int y0 = std::min(static_cast<int>(std::floor(v)), std::max(height - 2, 0));
  int x1 = std::min(x0 + 1, width - 1);
  int y1 = std::min(y0 + 1, height - 1);
  double fx = u - x0, fy = v - y0;
  double top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
  double bot = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
  return (1.0 - fy) * top + fy * bot;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

GrayImage load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::Parse, "invalid PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  int channels = png_get_channels(png, info);
  std::vector<png_byte> raw(static_cast<std::size_t>(png_get_rowbytes(png, info)) * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + y * png_get_rowbytes(png, info);
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  GrayImage img{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const png_byte* p = rows[y] + x * channels;
      img.at(x, y) = channels >= 3 ? (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0
                                   : p[0] / 255.0;
    }
  return img;
}

GrayImage load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::string magic;
  in >> magic;
  auto next_int = [&]() {
    int v;
    while (in >> std::ws && in.peek() == '#') {
      std::string skip;
      std::getline(in, skip);
    }
    if (!(in >> v)) throw Error(ErrorCode::Parse, "bad PNM header");
    return v;
  };
  bool ascii = magic == "P2" || magic == "P3";
  bool color = magic == "P3" || magic == "P6";
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
    throw Error(ErrorCode::Parse, "unsupported PNM type '" + magic + "'");
  int w = next_int(), h = next_int(), maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw Error(ErrorCode::Parse, "unsupported PNM dimensions or depth");
  in.get();
  GrayImage img{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  int c = color ? 3 : 1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double ch[3] = {0, 0, 0};
      for (int k = 0; k < c; ++k) {
        int v;
        if (ascii) {
          if (!(in >> v)) throw Error(ErrorCode::Parse, "truncated PNM");
        } else {
          v = in.get();
          if (v == EOF) throw Error(ErrorCode::Parse, "truncated PNM");
        }
        ch[k] = static_cast<double>(v) / maxval;
      }
      img.at(x, y) = color ? 0.299 * ch[0] + 0.587 * ch[1] + 0.114 * ch[2] : ch[0];
    }
  return img;
}

}  // namespace

GrayImage load_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  GrayImage img = ext == ".png" ? load_png(path) : load_pnm(path);
  if (img.empty()) throw Error(ErrorCode::Parse, "empty image '" + path.string() + "'");
  return img;
}

void save_png(const GrayImage& image, const std::filesystem::path& path) {
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "cannot save an empty image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "PNG write failed for '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x)
      row[x] = static_cast<png_byte>(std::lround(std::clamp(image.at(x, y), 0.0, 1.0) * 255.0));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Vec2 image_half_extent(int width, int height) {
  if (width >= height) return {1.0, static_cast<double>(height) / width};
  return {static_cast<double>(width) / height, 1.0};
}

TriMesh image_to_mesh(const GrayImage& image, int n) {
  if (image.empty()) throw Error(ErrorCode::InvalidArgument, "empty image");
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "grid resolution must be at least 2");
  Vec2 half = image_half_extent(image.width, image.height);
  std::vector<Vec3> verts;
  std::vector<double> gray;
  verts.reserve(static_cast<std::size_t>(n) * n);
  gray.reserve(verts.capacity());
  // Vertex (a, b): column a left to right, row b bottom to top.
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) {
      double s = static_cast<double>(a) / (n - 1);
      double t = static_cast<double>(b) / (n - 1);
      verts.emplace_back(-half.x() + 2.0 * half.x() * s, -half.y() + 2.0 * half.y() * t, 0.0);
      double u = s * (image.width - 1);
      double v = (1.0 - t) * (image.height - 1);
      gray.push_back(image.sample(u, v));
    }
  std::vector<Face> faces;
  faces.reserve(2 * static_cast<std::size_t>(n - 1) * (n - 1));
  for (int b = 0; b + 1 < n; ++b)
    for (int a = 0; a + 1 < n; ++a) {
      int v00 = b * n + a, v10 = v00 + 1, v01 = v00 + n, v11 = v01 + 1;
      faces.push_back({v00, v10, v11});
      faces.push_back({v00, v11, v01});
    }
  return TriMesh::create(std::move(verts), std::move(faces), 2, std::move(gray));
}

}  // namespace tot
