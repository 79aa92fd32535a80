#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "tot/error.hpp"
#include "tot/mesh.hpp"

namespace tot {
namespace {

double luminance(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

MeshFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".obj") return MeshFormat::Obj;
  if (ext == ".off") return MeshFormat::Off;
  throw Error(ErrorCode::InvalidArgument, "unknown mesh extension '" + ext + "'");
}

int dimension_of(const std::vector<Vec3>& v) {
  for (const Vec3& p : v)
    if (p.z() != 0.0) return 3;
  return 2;
}

TriMesh read_obj(std::istream& in) {
  std::vector<Vec3> verts;
  std::vector<double> gray;
  bool colored = true;
  std::vector<Face> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw Error(ErrorCode::Parse, "OBJ line " + std::to_string(lineno) + ": bad vertex");
      verts.emplace_back(x, y, z);
      double r, g, b;
      if (ss >> r >> g >> b) {
        if (r > 1.0 || g > 1.0 || b > 1.0) { r /= 255.0; g /= 255.0; b /= 255.0; }
        gray.push_back(luminance(r, g, b));
      } else {
        colored = false;
      }
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        auto slash = tok.find('/');
        int k = 0;
        try {
          k = std::stoi(tok.substr(0, slash));
        } catch (const std::exception&) {
          throw Error(ErrorCode::Parse, "OBJ line " + std::to_string(lineno) + ": bad face index");
        }
        idx.push_back(k < 0 ? static_cast<int>(verts.size()) + k : k - 1);
      }
      if (idx.size() != 3)
        throw Error(ErrorCode::Parse, "OBJ line " + std::to_string(lineno) +
                                          ": only triangular faces are supported");
      faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  if (verts.empty()) throw Error(ErrorCode::Parse, "OBJ has no vertices");
  std::optional<std::vector<double>> g;
  if (colored) g = std::move(gray);
  int dim = dimension_of(verts);
  return TriMesh::create(std::move(verts), std::move(faces), dim, std::move(g));
}

TriMesh read_off(std::istream& in) {
  // Strip comments, then tokenize the rest of the file.
  std::stringstream body;
  std::string line;
  std::string header;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (header.empty()) {
      std::istringstream ss(line);
      ss >> header;
      if (header.empty()) continue;
      std::string rest;
      std::getline(ss, rest);
      body << rest << '\n';
      continue;
    }
    body << line << '\n';
  }
  if (header != "OFF" && header != "COFF")
    throw Error(ErrorCode::Parse, "missing OFF header");
  std::size_t nv = 0, nf = 0, ne = 0;
  if (!(body >> nv >> nf >> ne)) throw Error(ErrorCode::Parse, "bad OFF counts");

  // Vertex lines may carry colors; read them line by line.
  std::string rest;
  std::getline(body, rest);
  std::vector<Vec3> verts;
  std::vector<double> gray;
  bool colored = header == "COFF";
  while (verts.size() < nv && std::getline(body, line)) {
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw Error(ErrorCode::Parse, "bad OFF vertex");
    }
    verts.emplace_back(x, y, z);
    double r, g, b;
    if (ss >> r >> g >> b) {
      if (r > 1.0 || g > 1.0 || b > 1.0) { r /= 255.0; g /= 255.0; b /= 255.0; }
      gray.push_back(luminance(r, g, b));
    } else {
      colored = false;
    }
  }
  if (verts.size() != nv) throw Error(ErrorCode::Parse, "truncated OFF vertex list");
  std::vector<Face> faces;
  for (std::size_t f = 0; f < nf; ++f) {
    int count = 0;
    Face t{};
    if (!(body >> count)) throw Error(ErrorCode::Parse, "truncated OFF face list");
    if (count != 3) throw Error(ErrorCode::Parse, "only triangular OFF faces are supported");
    if (!(body >> t[0] >> t[1] >> t[2])) throw Error(ErrorCode::Parse, "bad OFF face");
    std::getline(body, rest);
    faces.push_back(t);
  }
  std::optional<std::vector<double>> g;
  if (colored && gray.size() == nv) g = std::move(gray);
  int dim = dimension_of(verts);
  return TriMesh::create(std::move(verts), std::move(faces), dim, std::move(g));
}

}  // namespace

TriMesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  MeshFormat fmt = format ? *format : format_from_path(path);
  return fmt == MeshFormat::Obj ? read_obj(in) : read_off(in);
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               std::optional<MeshFormat> format) {
  MeshFormat fmt = format ? *format : format_from_path(path);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const auto& gray = mesh.gray();
  if (fmt == MeshFormat::Obj) {
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
      const Vec3& v = mesh.vertex(static_cast<int>(i));
      out << "v " << v.x() << ' ' << v.y() << ' ' << v.z();
      if (gray) out << ' ' << (*gray)[i] << ' ' << (*gray)[i] << ' ' << (*gray)[i];
      out << '\n';
    }
    for (const Face& t : mesh.faces())
      out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  } else {
    out << (gray ? "COFF\n" : "OFF\n");
    out << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
      const Vec3& v = mesh.vertex(static_cast<int>(i));
      out << v.x() << ' ' << v.y() << ' ' << v.z();
      if (gray) out << ' ' << (*gray)[i] << ' ' << (*gray)[i] << ' ' << (*gray)[i] << " 1";
      out << '\n';
    }
    for (const Face& t : mesh.faces()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

}  // namespace tot
