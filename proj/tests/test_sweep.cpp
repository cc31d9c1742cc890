#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "vrod/constraints.h"
#include "vrod/layout.h"

using namespace vrod;
using test::straight_test_rod;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SweepFixture {
  std::vector<Rod> rods;
  std::vector<MaterialParams> materials{MaterialParams{}};
  DofLayout layout;
  std::vector<HalfPlane> planes;
  std::vector<Vec3> pin_targets;
  SweepScratch scratch;

  explicit SweepFixture(std::vector<Rod> r) : rods(std::move(r)) {
    layout = build_layout(rods, materials);
    scratch.resize(layout);
  }

  EvalContext ctx() const {
    EvalContext c;
    c.rods = rods;
    c.layout = &layout;
    c.planes = planes;
    c.pin_targets = pin_targets;
    return c;
  }

  SweepOutcome sweep(std::span<ConstraintBlock> blocks, double h, double beta) {
    return jacobi_sweep(blocks, rods, ctx(), h, beta, scratch);
  }
};

ConstraintBlock pin_block(int rod, int vertex, int target_index, double stiffness = kInf) {
  ConstraintBlock b;
  b.kind = ConstraintKind::kPin;
  b.rod = rod;
  b.loc = vertex;
  b.aux = target_index;
  b.stiffness = Vec3::Constant(stiffness);
  return b;
}

}  // namespace

TEST_CASE("a rigid pin lands on its target in one unrelaxed sweep") {
  SweepFixture fx({straight_test_rod(2)});
  fx.pin_targets.push_back(Vec3(0.3, -0.2, 0.1));
  std::vector<ConstraintBlock> blocks = {pin_block(0, 0, 0)};

  const SweepOutcome outcome = fx.sweep(blocks, 0.01, 1.0);
  CHECK(outcome.active == 1);
  CHECK(outcome.skipped_singular == 0);
  CHECK((fx.rods[0].state.centers[0] - fx.pin_targets[0]).norm() < 1e-14);
}

TEST_CASE("relaxation scales the correction linearly") {
  for (const double beta : {0.25, 0.5, 0.75}) {
    SweepFixture fx({straight_test_rod(2)});
    fx.pin_targets.push_back(Vec3(1, 0, 0));
    std::vector<ConstraintBlock> blocks = {pin_block(0, 0, 0)};
    const Vec3 before = fx.rods[0].state.centers[0];
    fx.sweep(blocks, 0.01, beta);
    const Vec3 moved = fx.rods[0].state.centers[0] - before;
    // Rigid single constraint: the full correction is -W, relaxed by beta.
    CHECK((moved - beta * (fx.pin_targets[0] - before)).norm() < 1e-14);
  }
}

TEST_CASE("compliance follows the generalized constraint update") {
  SweepFixture fx({straight_test_rod(2)});
  fx.pin_targets.push_back(Vec3(0.5, 0.5, 0.5));
  const double k = 5e4;
  std::vector<ConstraintBlock> blocks = {pin_block(0, 0, 0, k)};

  const double h = 0.01;
  const double beta = 0.75;
  const double invw = fx.layout.inv_center[0];
  const Vec3 w0 = fx.rods[0].state.centers[0] - fx.pin_targets[0];

  fx.sweep(blocks, h, beta);

  // dlambda = beta * W / (h^2 invw + 1/k); dx = -h^2 invw dlambda.
  const double denom = h * h * invw + 1.0 / k;
  const Vec3 expected_dlambda = beta / denom * w0;
  const Vec3 expected_dx = -h * h * invw * expected_dlambda;
  CHECK((fx.rods[0].state.centers[0] - (Vec3::Zero() + expected_dx)).norm() < 1e-15);
  CHECK((blocks[0].lambda - expected_dlambda).norm() < 1e-12 * expected_dlambda.norm());

  SUBCASE("multipliers accumulate across sweeps") {
    const Vec3 after_one = blocks[0].lambda;
    fx.sweep(blocks, h, beta);
    CHECK(blocks[0].lambda.norm() > after_one.norm());
  }

  SUBCASE("repeated sweeps converge to the compliant equilibrium") {
    for (int i = 0; i < 300; ++i) fx.sweep(blocks, h, beta);
    // At the fixed point the residual matches the stored multiplier through
    // the compliance: lambda = k W. The total motion equals the accumulated
    // impulse response -h^2 invw lambda.
    const Vec3 w = fx.rods[0].state.centers[0] - fx.pin_targets[0];
    CHECK((blocks[0].lambda - k * w).norm() < 1e-9 * blocks[0].lambda.norm());
    const Vec3 total_dx = fx.rods[0].state.centers[0] - Vec3::Zero();
    CHECK((total_dx + h * h * invw * blocks[0].lambda).norm() < 1e-12);
  }
}

TEST_CASE("corrections on a shared vertex are averaged by touch count") {
  SweepFixture fx({straight_test_rod(2)});
  fx.pin_targets.push_back(Vec3(1, 0, 0));
  fx.pin_targets.push_back(Vec3(0, 1, 0));
  std::vector<ConstraintBlock> blocks = {pin_block(0, 0, 0), pin_block(0, 0, 1)};

  fx.sweep(blocks, 0.01, 1.0);
  // Both rigid pins want the vertex entirely; the averaged update lands on
  // the midpoint of the two targets.
  const Vec3 expected = 0.5 * (fx.pin_targets[0] + fx.pin_targets[1]);
  CHECK((fx.rods[0].state.centers[0] - expected).norm() < 1e-14);
}

TEST_CASE("updates are computed against one state snapshot") {
  // Same setup as above: were the sweep sequential, the second pin would see
  // the vertex already moved and the result would be biased toward its own
  // target instead of the exact midpoint.
  SweepFixture fx({straight_test_rod(2)});
  fx.pin_targets.push_back(Vec3(2, 0, 0));
  fx.pin_targets.push_back(Vec3(0, 0, 4));
  std::vector<ConstraintBlock> blocks = {pin_block(0, 0, 0), pin_block(0, 0, 1)};
  fx.sweep(blocks, 0.01, 1.0);
  CHECK((fx.rods[0].state.centers[0] - Vec3(1, 0, 2)).norm() < 1e-14);
}

TEST_CASE("an all-kinematic rigid constraint is skipped as singular") {
  SweepFixture fx({straight_test_rod(2)});
  fx.rods[0].pinned = {1, 1};
  fx.layout = build_layout(fx.rods, fx.materials);
  fx.scratch.resize(fx.layout);
  fx.pin_targets.push_back(Vec3(1, 1, 1));
  std::vector<ConstraintBlock> blocks = {pin_block(0, 0, 0)};

  const SweepOutcome outcome = fx.sweep(blocks, 0.01, 1.0);
  CHECK(outcome.skipped_singular == 1);
  CHECK(outcome.active == 0);
  CHECK(blocks[0].lambda == Vec3::Zero());
  CHECK(fx.rods[0].state.centers[0] == Vec3(0, 0, 0));
}

TEST_CASE("internal constraints conserve linear momentum") {
  // Unequal end masses via different radii; a single stretch constraint must
  // not create net momentum: sum of m dc is zero by the J^T structure.
  std::vector<Vec3> centers = {Vec3(0, 0, 0), Vec3(0, 0, 1)};
  std::vector<double> radii = {0.05, 0.09};
  Rod rod;
  rod.rest = make_rest_pose(centers, radii);
  rod.state = make_rest_state(rod.rest);
  rod.pinned.assign(2, 0);
  SweepFixture fx({std::move(rod)});
  fx.rods[0].state.centers[1] = Vec3(0.2, -0.1, 1.7);

  ConstraintBlock stretch;
  stretch.kind = ConstraintKind::kStretchZ;
  stretch.rod = 0;
  stretch.loc = 0;
  stretch.stiffness = Vec3::Constant(kInf);
  std::vector<ConstraintBlock> blocks = {stretch};

  const Vec3 before = fx.layout.center_weight[0] * fx.rods[0].state.centers[0] +
                      fx.layout.center_weight[1] * fx.rods[0].state.centers[1];
  fx.sweep(blocks, 0.01, 1.0);
  const Vec3 after = fx.layout.center_weight[0] * fx.rods[0].state.centers[0] +
                     fx.layout.center_weight[1] * fx.rods[0].state.centers[1];
  CHECK((after - before).norm() < 1e-12 * before.norm());
}

TEST_CASE("unilateral constraints act only on the violation side") {
  SweepFixture fx({straight_test_rod(2, 1.0, 0.05)});
  fx.planes.push_back({Vec3::UnitZ(), 0.0});

  ConstraintBlock hp;
  hp.kind = ConstraintKind::kHalfPlane;
  hp.unilateral = true;
  hp.rod = 0;
  hp.loc = 0;
  hp.aux = 0;
  hp.stiffness = Vec3(kInf, 0, 0);
  std::vector<ConstraintBlock> blocks = {hp};

  SUBCASE("a separated vertex is untouched") {
    fx.rods[0].state.centers[0] = Vec3(0, 0, 0.5);
    const SweepOutcome outcome = fx.sweep(blocks, 0.01, 1.0);
    CHECK(outcome.active == 0);
    CHECK(fx.rods[0].state.centers[0] == Vec3(0, 0, 0.5));
    CHECK(blocks[0].lambda == Vec3::Zero());
  }

  SUBCASE("a violating vertex is pushed out with a one-sided multiplier") {
    fx.rods[0].state.centers[0] = Vec3(0, 0, 0.01);  // clearance -0.04
    for (int i = 0; i < 40; ++i) {
      fx.sweep(blocks, 0.01, 1.0);
      // The multiplier never crosses to the pulling side, so the net effect
      // on the vertex is always outward.
      CHECK(blocks[0].lambda[0] <= 0.0);
      CHECK(fx.rods[0].state.centers[0].z() >= 0.01 - 1e-12);
    }
    const double clearance =
        fx.rods[0].state.centers[0].z() - 0.05 * fx.rods[0].state.scales[0];
    CHECK(clearance > -1e-9);
  }
}

TEST_CASE("scale corrections clamp at the minimum scale") {
  SweepFixture fx({straight_test_rod(2, 1.0, 0.05)});
  fx.planes.push_back({Vec3::UnitZ(), 0.0});
  // Deep violation: the rigid solve shrinks the vertex sphere drastically and
  // the clamp catches the overshoot.
  fx.rods[0].state.centers[0] = Vec3(0, 0, -0.5);

  ConstraintBlock hp;
  hp.kind = ConstraintKind::kHalfPlane;
  hp.unilateral = true;
  hp.rod = 0;
  hp.loc = 0;
  hp.aux = 0;
  hp.stiffness = Vec3(kInf, 0, 0);
  std::vector<ConstraintBlock> blocks = {hp};

  fx.sweep(blocks, 0.01, 1.0);
  CHECK(fx.rods[0].state.scales[0] == kMinScale);
}

TEST_CASE("frames stay unit after orientation corrections") {
  SweepFixture fx({straight_test_rod(3, 1.0)});
  fx.rods[0].state.frames[1] = Quat(Eigen::AngleAxisd(0.8, Vec3(1, 2, 3).normalized()));

  ConstraintBlock bend;
  bend.kind = ConstraintKind::kBendTwist;
  bend.rod = 0;
  bend.loc = 1;
  bend.stiffness = Vec3::Constant(kInf);
  std::vector<ConstraintBlock> blocks = {bend};

  for (int i = 0; i < 5; ++i) {
    fx.sweep(blocks, 0.01, 0.75);
    for (const Quat& q : fx.rods[0].state.frames) {
      CHECK(std::abs(q.norm() - 1.0) < 1e-14);
    }
  }
}

TEST_CASE("a non-finite update names the offending constraint") {
  SweepFixture fx({straight_test_rod(2)});
  fx.pin_targets.push_back(Vec3(0, 0, 0));
  fx.rods[0].state.centers[0] = Vec3(std::nan(""), 0, 0);
  std::vector<ConstraintBlock> blocks = {pin_block(0, 0, 0)};

  try {
    fx.sweep(blocks, 0.01, 1.0);
    FAIL("expected SimulationError");
  } catch (const SimulationError& e) {
    CHECK(std::string(e.what()).find("pin") != std::string::npos);
  }
}
