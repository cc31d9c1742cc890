#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vrod/bundling.h"
#include "vrod/collision.h"
#include "vrod/rod.h"
#include "vrod/skinning.h"

namespace vrod {

/// How per-vertex scales evolve. kSimulated is the full model (scale is a
/// dynamic DOF). kPostStepLengthRatio is the classic-rod baseline: scale
/// DOFs are frozen during the solve, scale-coupled constraints are dropped,
/// and after each step every vertex scale is reset from the incident
/// elements' length ratio, s = sbar * sqrt(rest_length / current_length).
enum class ScaleMode {
  kSimulated = 0,
  kPostStepLengthRatio,
};

struct SolverSettings {
  double dt = 1.0 / 60.0;
  int iterations = 20;
  int substeps = 1;
  double beta = 0.75;         // relaxation applied inside delta-lambda
  Vec3 gravity = Vec3(0, 0, -9.81);
  int dichotomous_iterations = 10;
  int shape_match_period = 2;  // bundle projection every N solver iterations
  double contact_stiffness = std::numeric_limits<double>::infinity();
  double velocity_damping = 0.0;  // fraction of velocity removed per substep
  bool deterministic = false;     // zero the wall-clock metric column
  ScaleMode scale_mode = ScaleMode::kSimulated;

  void validate() const;
};

/// Rigid transform keyframe; tracks interpolate linearly (slerp for the
/// rotation) and clamp outside the key range.
struct RigidKeyframe {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();
};

struct Bone {
  std::vector<RigidKeyframe> keys;
  Vec3 position_at(double t) const;
  Quat rotation_at(double t) const;
};

/// Collision-only pill, optionally rigidly keyframed by a bone: the stored
/// geometry is in the bone's local space and is posed every substep.
struct KinematicPill {
  Pill pill;      // rod == -1; world space when bone < 0
  int bone = -1;  // index into Scene::bones, or -1 for a static pill
};

/// Linear motion of a pinned vertex between t0 and t1 (clamped outside).
struct PinMotion {
  int rod = 0;
  int vertex = 0;
  Vec3 start = Vec3::Zero();
  Vec3 target = Vec3::Zero();
  double t0 = 0.0;
  double t1 = 0.0;
  Vec3 position_at(double t) const;
};

/// Compliant attachment of a vertex center to a fixed target.
struct SoftPin {
  int rod = 0;
  int vertex = 0;
  Vec3 target = Vec3::Zero();
  double stiffness = std::numeric_limits<double>::infinity();
};

/// Muscle-style fiber shortening: the rod's strain rest lengths over
/// [first_element, last_element] are scaled by (1 - a(t) * factor), with
/// a(t) ramping linearly from 0 to 1 over [t_start, t_end].
struct Activation {
  int rod = 0;
  double factor = 0.2;
  double t_start = 0.0;
  double t_end = 1.0;
  int first_element = 0;
  int last_element = -1;  // -1: through the last element
  double amount_at(double t) const;
};

/// Per-step scalar logging of one vertex (center and scale).
struct Probe {
  std::string name;
  int rod = 0;
  int vertex = 0;
};

/// Surface mesh skinned to the rods' pills.
struct SkinSetup {
  TriMesh mesh;
  int max_influences = 8;
  double epsilon = 1e-4;
  int smooth_iterations = 0;
};

struct Scene {
  std::vector<Rod> rods;
  std::vector<MaterialParams> materials;
  std::vector<HalfPlane> planes;
  std::vector<KinematicPill> kinematic_pills;
  std::vector<Bone> bones;
  std::vector<std::vector<BundleMember>> bundles;
  std::vector<PinMotion> pin_motions;
  std::vector<SoftPin> soft_pins;
  std::vector<Activation> activations;
  std::vector<Probe> probes;
  SolverSettings settings;
  std::optional<SkinSetup> skin;

  /// Checks index ranges, sizes, units and bundle disjointness; throws
  /// std::invalid_argument naming the offending entry.
  void validate() const;
};

}  // namespace vrod
