#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "vrod/skinning.h"

using namespace vrod;

namespace {

Pill make_pill(const Vec3& c0, const Vec3& c1, double r) {
  Pill p;
  p.c0 = c0;
  p.c1 = c1;
  p.r0 = r;
  p.r1 = r;
  return p;
}

}  // namespace

TEST_CASE("inverse-square weights from exact surface distances") {
  // Three pills at surface distances 1, 2, 2 from the single mesh vertex:
  // scores 1, 1/4, 1/4 normalize to 2/3, 1/6, 1/6.
  const std::vector<Pill> pills = {
      make_pill(Vec3(-1, 1.5, 0), Vec3(1, 1.5, 0), 0.5),
      make_pill(Vec3(-1, -2.5, 0), Vec3(1, -2.5, 0), 0.5),
      make_pill(Vec3(-1, 0, 2.5), Vec3(1, 0, 2.5), 0.5),
  };
  const std::vector<PillTransform> transforms(3);
  TriMesh mesh;
  mesh.vertices.push_back(Vec3::Zero());

  const SkinBinding binding = bind_skin(mesh, pills, transforms);
  REQUIRE(binding.offsets == std::vector<int>{0, 3});
  CHECK(binding.pills == std::vector<int>{0, 1, 2});
  CHECK(binding.weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(binding.weights[1] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(binding.weights[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(binding.clamped_vertices == 0);
}

TEST_CASE("vertices inside a pill clamp to epsilon and are counted") {
  const std::vector<Pill> pills = {
      make_pill(Vec3(-1, 0, 0), Vec3(1, 0, 0), 0.5),
      make_pill(Vec3(-1, 3, 0), Vec3(1, 3, 0), 0.5),
  };
  const std::vector<PillTransform> transforms(2);
  TriMesh mesh;
  mesh.vertices.push_back(Vec3(0, 0.1, 0));  // inside pill 0 (distance -0.4)
  mesh.vertices.push_back(Vec3(0, 1.5, 0));  // outside both

  const SkinBinding binding = bind_skin(mesh, pills, transforms, 8, 1e-4);
  CHECK(binding.clamped_vertices == 1);
  // The clamped distance 1e-4 gives the inside pill essentially all weight.
  CHECK(binding.weights[0] > 0.99);
  CHECK(binding.pills[0] == 0);
}

TEST_CASE("influences truncate to the strongest pills, listed by index") {
  const std::vector<Pill> pills = {
      make_pill(Vec3(-1, 4.5, 0), Vec3(1, 4.5, 0), 0.5),   // distance 4
      make_pill(Vec3(-1, -1.5, 0), Vec3(1, -1.5, 0), 0.5), // distance 1
      make_pill(Vec3(-1, 0, 2.5), Vec3(1, 0, 2.5), 0.5),   // distance 2
      make_pill(Vec3(-1, 0, -8.5), Vec3(1, 0, -8.5), 0.5), // distance 8
  };
  const std::vector<PillTransform> transforms(4);
  TriMesh mesh;
  mesh.vertices.push_back(Vec3::Zero());

  const SkinBinding binding = bind_skin(mesh, pills, transforms, 2);
  REQUIRE(binding.offsets == std::vector<int>{0, 2});
  // Pills 1 (score 1) and 2 (score 1/4) survive; output is index-sorted.
  CHECK(binding.pills == std::vector<int>{1, 2});
  CHECK(binding.weights[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(binding.weights[1] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("score ties break toward the lower pill index") {
  // Three pills all at distance 1; only two influences may survive.
  const std::vector<Pill> pills = {
      make_pill(Vec3(-1, 1.5, 0), Vec3(1, 1.5, 0), 0.5),
      make_pill(Vec3(-1, -1.5, 0), Vec3(1, -1.5, 0), 0.5),
      make_pill(Vec3(-1, 0, 1.5), Vec3(1, 0, 1.5), 0.5),
  };
  const std::vector<PillTransform> transforms(3);
  TriMesh mesh;
  mesh.vertices.push_back(Vec3::Zero());

  const SkinBinding binding = bind_skin(mesh, pills, transforms, 2);
  CHECK(binding.pills == std::vector<int>{0, 1});
  CHECK(binding.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(binding.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("binding validation errors") {
  TriMesh mesh;
  mesh.vertices.push_back(Vec3::Zero());
  const std::vector<Pill> pills = {make_pill(Vec3(-1, 1.5, 0), Vec3(1, 1.5, 0), 0.5)};
  const std::vector<PillTransform> one(1), two(2);

  CHECK_THROWS_WITH_AS(bind_skin(mesh, {}, {}), "skin binding needs at least one pill",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(bind_skin(mesh, pills, two), "pill list and transform list must match",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(bind_skin(mesh, pills, one, 0), "max_influences must be at least 1",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(bind_skin(mesh, pills, one, 8, 0.0), "epsilon must be positive",
                       std::invalid_argument);
}

TEST_CASE("weight fairing averages with the one-ring") {
  // One triangle: every vertex neighbours the other two. Hand-built binding
  // gives vertex 0 and 2 pill 0, vertex 1 pill 1.
  TriMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(5, 5, 5)};
  mesh.triangles = {{0, 1, 2}};  // vertex 3 is isolated

  SkinBinding binding;
  binding.offsets = {0, 1, 2, 3, 4};
  binding.pills = {0, 1, 0, 1};
  binding.weights = {1.0, 1.0, 1.0, 1.0};
  binding.max_influences = 8;

  smooth_binding(binding, mesh, 1);

  // Vertex 0: 0.5 own {0:1} + 0.25 {1:1} + 0.25 {0:1} = {0:0.75, 1:0.25}.
  CHECK(binding.offsets == std::vector<int>{0, 2, 4, 6, 7});
  CHECK(binding.pills[0] == 0);
  CHECK(binding.pills[1] == 1);
  CHECK(binding.weights[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(binding.weights[1] == doctest::Approx(0.25).epsilon(1e-12));
  // Vertex 1: 0.5 {1:1} + 0.25 {0:1} + 0.25 {0:1} = {0:0.5, 1:0.5}.
  CHECK(binding.weights[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(binding.weights[3] == doctest::Approx(0.5).epsilon(1e-12));
  // Vertex 2 mirrors vertex 0.
  CHECK(binding.weights[4] == doctest::Approx(0.75).epsilon(1e-12));
  // The isolated vertex keeps its own weights.
  CHECK(binding.pills[6] == 1);
  CHECK(binding.weights[6] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fairing respects the influence cap and its tie rule") {
  TriMesh mesh;
  mesh.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  mesh.triangles = {{0, 1, 2}};
  SkinBinding binding;
  binding.offsets = {0, 1, 2, 3};
  binding.pills = {0, 1, 0};
  binding.weights = {1.0, 1.0, 1.0};
  binding.max_influences = 1;

  smooth_binding(binding, mesh, 1);
  // Vertex 1 blends to {0:0.5, 1:0.5}; the cap keeps the lower pill index
  // and renormalizes back to one.
  CHECK(binding.offsets == std::vector<int>{0, 1, 2, 3});
  CHECK(binding.pills[1] == 0);
  CHECK(binding.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("deformation follows the pills exactly") {
  // One pill along x; mesh vertices near it; bind with that single influence.
  const std::vector<Pill> pills = {make_pill(Vec3(-1, 0, 0), Vec3(1, 0, 0), 0.5)};
  std::vector<PillTransform> rest(1);
  rest[0].center = Vec3(0, 0, 0);
  rest[0].scale = 1.0;
  rest[0].rotation = Quat::Identity();

  TriMesh mesh;
  mesh.vertices = {Vec3(0.2, 0.5, 0), Vec3(-0.3, 0, 0.5), Vec3(0.7, -0.5, 0)};
  const SkinBinding binding = bind_skin(mesh, pills, rest);

  std::vector<Vec3> out;

  SUBCASE("translation") {
    std::vector<PillTransform> current = rest;
    current[0].center += Vec3(3, -1, 2);
    deform_mesh(binding, current, mesh, out);
    REQUIRE(out.size() == 3);
    for (int v = 0; v < 3; ++v) {
      CHECK((out[v] - (mesh.vertices[v] + Vec3(3, -1, 2))).norm() < 1e-12);
    }
  }

  SUBCASE("scale doubling about the pill center") {
    std::vector<PillTransform> current = rest;
    current[0].scale = 2.0;
    deform_mesh(binding, current, mesh, out);
    for (int v = 0; v < 3; ++v) {
      CHECK((out[v] - 2.0 * mesh.vertices[v]).norm() < 1e-12);  // center is the origin
    }
  }

  SUBCASE("rotation about the pill frame") {
    std::vector<PillTransform> current = rest;
    current[0].rotation = Quat(Eigen::AngleAxisd(0.5 * kPi, Vec3::UnitZ()));
    deform_mesh(binding, current, mesh, out);
    for (int v = 0; v < 3; ++v) {
      const Vec3 expected = current[0].rotation * mesh.vertices[v];
      CHECK((out[v] - expected).norm() < 1e-12);
    }
  }
}

TEST_CASE("blended deformation interpolates two pills") {
  // Two parallel pills; a midway vertex binds half-and-half. Translating one
  // pill moves the vertex by half the translation.
  const std::vector<Pill> pills = {
      make_pill(Vec3(-1, 1.5, 0), Vec3(1, 1.5, 0), 0.5),
      make_pill(Vec3(-1, -1.5, 0), Vec3(1, -1.5, 0), 0.5),
  };
  std::vector<PillTransform> rest(2);
  rest[0].center = Vec3(0, 1.5, 0);
  rest[1].center = Vec3(0, -1.5, 0);
  TriMesh mesh;
  mesh.vertices = {Vec3::Zero()};
  const SkinBinding binding = bind_skin(mesh, pills, rest);
  REQUIRE(binding.weights.size() == 2);
  CHECK(binding.weights[0] == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<PillTransform> current = rest;
  current[0].center += Vec3(0, 0, 1);
  std::vector<Vec3> out;
  deform_mesh(binding, current, mesh, out);
  CHECK((out[0] - Vec3(0, 0, 0.5)).norm() < 1e-12);
}

TEST_CASE("deformation validates the transform and mesh sizes") {
  const std::vector<Pill> pills = {make_pill(Vec3(-1, 0, 0), Vec3(1, 0, 0), 0.5)};
  const std::vector<PillTransform> rest(1);
  TriMesh mesh;
  mesh.vertices = {Vec3(0, 1, 0)};
  const SkinBinding binding = bind_skin(mesh, pills, rest);

  std::vector<Vec3> out;
  const std::vector<PillTransform> wrong(2);
  CHECK_THROWS_WITH_AS(deform_mesh(binding, wrong, mesh, out),
                       "transform count changed since binding", std::invalid_argument);
  TriMesh bigger = mesh;
  bigger.vertices.push_back(Vec3(0, 2, 0));
  CHECK_THROWS_WITH_AS(deform_mesh(binding, rest, bigger, out), "binding does not match mesh",
                       std::invalid_argument);
}

TEST_CASE("pill transforms sample element midpoints") {
  Rod rod = test::straight_test_rod(3, 1.0, 0.05);
  rod.state.scales = {1.0, 2.0, 4.0};
  rod.state.centers[2] = Vec3(0, 0, 1.5);  // stretch the last element
  const std::vector<Rod> rods = {rod};

  const auto current = rod_pill_transforms(rods);
  REQUIRE(current.size() == 2);
  CHECK((current[0].center - Vec3(0, 0, 0.25)).norm() < 1e-15);
  CHECK(current[0].scale == doctest::Approx(1.5).epsilon(1e-15));
  CHECK((current[1].center - Vec3(0, 0, 1.0)).norm() < 1e-15);
  CHECK(current[1].scale == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(current[0].rotation.angularDistance(rod.state.frames[0]) == 0.0);

  const auto rest = rod_rest_pill_transforms(rods);
  CHECK((rest[1].center - Vec3(0, 0, 0.75)).norm() < 1e-15);
  CHECK(rest[1].scale == doctest::Approx(1.0).epsilon(1e-15));

  const auto rest_pills = rod_rest_pills(rods);
  REQUIRE(rest_pills.size() == 2);
  CHECK(rest_pills[0].r0 == doctest::Approx(0.05).epsilon(1e-15));  // rest scale 1 x radius
  CHECK(rest_pills[1].element == 1);
}
