#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "vrod/obj_io.h"

using namespace vrod;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
  const fs::path dir = fs::temp_directory_path() / "vrod_obj_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_text(const std::string& name, const std::string& text) {
  const fs::path p = test_dir() / name;
  std::ofstream out(p);
  out << text;
  return p;
}

void expect_read_error(const fs::path& p, const std::string& suffix) {
  try {
    read_obj(p);
    FAIL("expected read_obj to throw for ", p.string());
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    INFO("message: ", what);
    CHECK(what.size() >= suffix.size());
    CHECK(what.compare(what.size() - suffix.size(), suffix.size(), suffix) == 0);
    CHECK(what.find(p.string()) == 0);  // messages start with the file path
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return all;
}

/// Signed volume of a closed triangle mesh via the divergence theorem.
double mesh_volume(const TriMesh& mesh) {
  double vol = 0.0;
  for (const auto& tri : mesh.triangles) {
    vol += mesh.vertices[tri[0]].dot(mesh.vertices[tri[1]].cross(mesh.vertices[tri[2]])) / 6.0;
  }
  return vol;
}

}  // namespace

TEST_CASE("OBJ roundtrip preserves short-decimal geometry exactly") {
  TriMesh mesh;
  mesh.vertices = {Vec3(0.1, 0.25, -1.5), Vec3(2.5, 0, 0.125), Vec3(-0.75, 3.5, 0),
                   Vec3(0, -2.25, 1.1)};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  const fs::path p = test_dir() / "roundtrip.obj";
  write_obj(p, mesh);

  const TriMesh back = read_obj(p);
  REQUIRE(back.vertices.size() == 4);
  REQUIRE(back.triangles.size() == 2);
  for (int v = 0; v < 4; ++v) {
    CHECK((back.vertices[v] - mesh.vertices[v]).norm() == 0.0);
  }
  for (int t = 0; t < 2; ++t) {
    CHECK(back.triangles[t] == mesh.triangles[t]);
  }
}

TEST_CASE("written OBJ carries recomputed normals and v//n faces") {
  TriMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(9, 9, 9)};
  mesh.triangles = {{0, 1, 2}};  // counter-clockwise in the xy plane
  const fs::path p = test_dir() / "normals.obj";
  write_obj(p, mesh);
  const std::string text = slurp(p);
  // The face plane normal is +z for its three vertices; the unused vertex
  // falls back to the +z default as well.
  CHECK(text.find("vn 0 0 1\n") != std::string::npos);
  CHECK(text.find("f 1//1 2//2 3//3\n") != std::string::npos);
  CHECK(text.find("v 9 9 9\n") != std::string::npos);
}

TEST_CASE("face corner variants and fan triangulation") {
  const fs::path p = write_text("variants.obj",
                                "# comment line\n"
                                "v 0 0 0\n"
                                "v 1 0 0\n"
                                "v 1 1 0\n"
                                "v 0 1 0\n"
                                "vn 0 0 1\n"
                                "vt 0.5 0.5\n"
                                "f 1/1/1 2//1 3 4/4\n");
  const TriMesh mesh = read_obj(p);
  REQUIRE(mesh.vertices.size() == 4);
  REQUIRE(mesh.triangles.size() == 2);  // quad fans into two triangles
  CHECK(mesh.triangles[0] == std::array<int, 3>{0, 1, 2});
  CHECK(mesh.triangles[1] == std::array<int, 3>{0, 2, 3});
}

TEST_CASE("negative face indices count from the end") {
  const fs::path p = write_text("negative.obj",
                                "v 0 0 0\n"
                                "v 1 0 0\n"
                                "v 0 1 0\n"
                                "f -3 -2 -1\n");
  const TriMesh mesh = read_obj(p);
  REQUIRE(mesh.triangles.size() == 1);
  CHECK(mesh.triangles[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("malformed OBJ input reports the line") {
  expect_read_error(write_text("badvert.obj", "v 0 0 0\nv 1 2\n"), ":2: malformed vertex line");
  expect_read_error(write_text("badcorner.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 bad\n"),
                    ":4: malformed face corner 'bad'");
  expect_read_error(write_text("missingvert.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 5\n"),
                    ":4: face references missing vertex 5");
  expect_read_error(write_text("shortface.obj", "v 0 0 0\nv 1 0 0\nf 1 2\n"),
                    ":3: face needs at least 3 corners");

  try {
    read_obj(test_dir() / "does_not_exist.obj");
    FAIL("expected read_obj to throw for a missing file");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("cannot open OBJ file: ") == 0);
  }
}

TEST_CASE("pill tessellation lies on the surface and is watertight") {
  Pill pill;
  pill.c0 = Vec3(0.3, -0.2, 0.1);
  pill.c1 = Vec3(1.1, 0.4, 0.9);
  pill.r0 = 0.3;
  pill.r1 = 0.12;
  const int longitudes = 16, cap_rings = 9;
  const TriMesh mesh = tessellate_pill(pill, longitudes, cap_rings);

  const int interior_rings = 2 * cap_rings - 1;
  CHECK(static_cast<int>(mesh.vertices.size()) == 2 + interior_rings * longitudes);
  CHECK(static_cast<int>(mesh.triangles.size()) ==
        2 * longitudes + (interior_rings - 1) * 2 * longitudes);

  // Every vertex sits on the hull: caps on their sphere arcs, cone rings on
  // the envelope, which the projection reports as distance zero.
  double worst = 0.0;
  for (const Vec3& v : mesh.vertices) {
    worst = std::max(worst, std::abs(pill_project(v, pill).distance));
  }
  CHECK(worst < 1e-10);

  // Watertight: every undirected edge is shared by exactly two triangles.
  std::map<std::pair<int, int>, int> edges;
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      edges[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  for (const auto& [edge, count] : edges) {
    CHECK(count == 2);
  }
}

TEST_CASE("uniform pill tessellation encloses the capsule volume") {
  Pill pill;
  pill.c0 = Vec3(0, 0, 0);
  pill.c1 = Vec3(0, 0, 1.2);
  pill.r0 = pill.r1 = 0.25;
  const TriMesh mesh = tessellate_pill(pill, 32, 16);
  const double exact = kPi * 0.25 * 0.25 * 1.2 + 4.0 / 3.0 * kPi * 0.25 * 0.25 * 0.25;
  // Inscribed polyhedron: a little below the smooth volume, outward-wound.
  CHECK(mesh_volume(mesh) > 0.95 * exact);
  CHECK(mesh_volume(mesh) < exact);
}

TEST_CASE("multi-pill tessellation concatenates with offset indices") {
  Pill a;
  a.c0 = Vec3(0, 0, 0);
  a.c1 = Vec3(1, 0, 0);
  a.r0 = a.r1 = 0.1;
  Pill b = a;
  b.c0 = Vec3(0, 2, 0);
  b.c1 = Vec3(1, 2, 0);
  const std::vector<Pill> pills = {a, b};
  const TriMesh one = tessellate_pill(a, 8, 4);
  const TriMesh both = tessellate_pills(pills, 8, 4);
  CHECK(both.vertices.size() == 2 * one.vertices.size());
  CHECK(both.triangles.size() == 2 * one.triangles.size());
  const int base = static_cast<int>(one.vertices.size());
  // Triangles of the second pill reference only the second vertex block.
  for (std::size_t t = one.triangles.size(); t < both.triangles.size(); ++t) {
    for (int k = 0; k < 3; ++k) {
      CHECK(both.triangles[t][k] >= base);
      CHECK(both.triangles[t][k] < 2 * base);
    }
  }
}
