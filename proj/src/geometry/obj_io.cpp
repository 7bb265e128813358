#include "sesdf/geometry/obj_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace sesdf {
namespace {

int parse_index(const std::string& token, std::size_t line_no) {
  const std::string head = token.substr(0, token.find('/'));
  int value = 0;
  const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
  if (ec != std::errc() || ptr != head.data() + head.size() || value < 1) {
    throw Error("OBJ line " + std::to_string(line_no) + ": bad face index '" + token + "'");
  }
  return value - 1;
}

}  // namespace

TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open OBJ file: " + path.string());
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) {
        throw Error("OBJ line " + std::to_string(line_no) + ": malformed vertex");
      }
      mesh.vertices.push_back(p);
    } else if (tag == "f") {
      std::string a, b, c, extra;
      if (!(ss >> a >> b >> c)) throw Error("OBJ line " + std::to_string(line_no) + ": malformed face");
      if (ss >> extra) throw Error("OBJ line " + std::to_string(line_no) + ": only triangles are supported");
      mesh.faces.push_back({parse_index(a, line_no), parse_index(b, line_no), parse_index(c, line_no)});
    }
  }
  mesh.validate();
  drop_degenerate_faces(mesh);
  return mesh;
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write OBJ file: " + path.string());
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Face& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw Error("failed writing OBJ file: " + path.string());
}

}  // namespace sesdf
