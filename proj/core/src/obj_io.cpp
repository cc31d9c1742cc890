#include "vrod/obj_io.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vrod {

TriMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open OBJ file: " + path.string());
  TriMesh mesh;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": malformed vertex line");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> corners;
      std::string token;
      while (ss >> token) {
        // Accept v, v/t, v//n, v/t/n references; only the vertex index is used.
        const std::size_t slash = token.find('/');
        const std::string head = slash == std::string::npos ? token : token.substr(0, slash);
        int idx = 0;
        try {
          idx = std::stoi(head);
        } catch (const std::exception&) {
          throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                   ": malformed face corner '" + token + "'");
        }
        if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx + 1;
        if (idx < 1 || idx > static_cast<int>(mesh.vertices.size())) {
          throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                   ": face references missing vertex " + head);
        }
        corners.push_back(idx - 1);
      }
      if (corners.size() < 3) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": face needs at least 3 corners");
      }
      for (std::size_t k = 1; k + 1 < corners.size(); ++k) {
        mesh.triangles.push_back({corners[0], corners[k], corners[k + 1]});
      }
    }
    // All other tags (vn, vt, usemtl, o, g, s, #, mtllib) are ignored.
  }
  return mesh;
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (const auto& tri : mesh.triangles) {
    const Vec3 area_normal = (mesh.vertices[tri[1]] - mesh.vertices[tri[0]])
                                 .cross(mesh.vertices[tri[2]] - mesh.vertices[tri[0]]);
    for (int k = 0; k < 3; ++k) normals[tri[k]] += area_normal;
  }
  for (Vec3& n : normals) {
    const double len = n.norm();
    n = len > 1e-20 ? Vec3(n / len) : Vec3::UnitZ();
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write OBJ file: " + path.string());
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const Vec3& n : normals) {
    std::snprintf(buf, sizeof buf, "vn %.6g %.6g %.6g\n", n.x(), n.y(), n.z());
    out << buf;
  }
  for (const auto& tri : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "f %d//%d %d//%d %d//%d\n", tri[0] + 1, tri[0] + 1,
                  tri[1] + 1, tri[1] + 1, tri[2] + 1, tri[2] + 1);
    out << buf;
  }
}

TriMesh tessellate_pill(const Pill& pill, int longitudes, int cap_rings) {
  TriMesh mesh;
  Vec3 axis = pill.c1 - pill.c0;
  const double l = axis.norm();
  axis = l > 1e-12 ? Vec3(axis / l) : Vec3::UnitZ();

  // Profile in (u, v): u along the axis from c0, v the radial offset. The
  // tangent cone leaves sphere 0 at latitude psi above the equator, where
  // sin(psi) = (r0 - r1)/l.
  const double sin_psi = l > 1e-12 ? std::clamp((pill.r0 - pill.r1) / l, -1.0, 1.0) : 0.0;
  const double psi = std::asin(sin_psi);

  std::vector<double> us, vs;
  for (int i = 0; i <= cap_rings; ++i) {  // cap 0: pole (-pi/2) up to psi
    const double phi = -0.5 * kPi + (psi + 0.5 * kPi) * i / cap_rings;
    us.push_back(pill.r0 * std::sin(phi));
    vs.push_back(pill.r0 * std::cos(phi));
  }
  for (int i = 1; i <= cap_rings; ++i) {  // cap 1: psi up to pole (+pi/2)
    const double phi = psi + (0.5 * kPi - psi) * i / cap_rings;
    us.push_back(l + pill.r1 * std::sin(phi));
    vs.push_back(pill.r1 * std::cos(phi));
  }

  const Quat frame = minimal_rotation(Vec3::UnitZ(), axis);
  const Vec3 ex = frame * Vec3::UnitX();
  const Vec3 ey = frame * Vec3::UnitY();
  const int rings = static_cast<int>(us.size());

  // Poles are the first and last profile points (v == 0 there).
  mesh.vertices.push_back(pill.c0 + axis * us.front());
  const int pole0 = 0;
  std::vector<int> ring_base(rings, -1);
  for (int i = 1; i + 1 < rings; ++i) {
    ring_base[i] = static_cast<int>(mesh.vertices.size());
    for (int j = 0; j < longitudes; ++j) {
      const double ang = 2.0 * kPi * j / longitudes;
      mesh.vertices.push_back(pill.c0 + axis * us[i] +
                              (ex * std::cos(ang) + ey * std::sin(ang)) * vs[i]);
    }
  }
  const int pole1 = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back(pill.c0 + axis * us.back());

  for (int j = 0; j < longitudes; ++j) {  // pole fans
    const int jn = (j + 1) % longitudes;
    mesh.triangles.push_back({pole0, ring_base[1] + j, ring_base[1] + jn});
    mesh.triangles.push_back({pole1, ring_base[rings - 2] + jn, ring_base[rings - 2] + j});
  }
  for (int i = 1; i + 2 < rings; ++i) {  // quad strips between rings
    for (int j = 0; j < longitudes; ++j) {
      const int jn = (j + 1) % longitudes;
      const int a = ring_base[i] + j, b = ring_base[i] + jn;
      const int c = ring_base[i + 1] + j, d = ring_base[i + 1] + jn;
      mesh.triangles.push_back({a, c, d});
      mesh.triangles.push_back({a, d, b});
    }
  }
  return mesh;
}

TriMesh tessellate_pills(std::span<const Pill> pills, int longitudes, int cap_rings) {
  TriMesh mesh;
  for (const Pill& pill : pills) {
    const TriMesh part = tessellate_pill(pill, longitudes, cap_rings);
    const int base = static_cast<int>(mesh.vertices.size());
    mesh.vertices.insert(mesh.vertices.end(), part.vertices.begin(), part.vertices.end());
    for (const auto& tri : part.triangles) {
      mesh.triangles.push_back({tri[0] + base, tri[1] + base, tri[2] + base});
    }
  }
  return mesh;
}

}  // namespace vrod
