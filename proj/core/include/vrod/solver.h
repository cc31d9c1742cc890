#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vrod/bundling.h"
#include "vrod/constraints.h"
#include "vrod/scene.h"
#include "vrod/skinning.h"

namespace vrod {

struct PhaseTimings {
  double predict_ms = 0.0;
  double broad_ms = 0.0;
  double narrow_ms = 0.0;
  double solve_ms = 0.0;
  double finalize_ms = 0.0;
  double total_ms = 0.0;
};

struct StepReport {
  int step = 0;
  double time = 0.0;                // simulation time after the step
  std::vector<double> residuals;    // per elastic kind, length-weighted RMS
  double max_penetration = 0.0;     // deepest violation at end of step, >= 0
  int contact_count = 0;
  int broad_pairs = 0;
  int skipped_singular = 0;
  int dof_count = 0;
  PhaseTimings timings;
};

/// Optional external loads; empty vectors mean no loads. When present,
/// sizes must match the scene's rods (per vertex / per element).
struct ExternalLoads {
  std::vector<std::vector<Vec3>> force_density;  // per rod, per vertex (force/volume)
  std::vector<std::vector<Vec3>> torque;         // per rod, per element (world frame)
  std::vector<std::vector<double>> scale_load;   // per rod, per element
};

/// Inertial prediction of one rod, in place: centers, scales and frames
/// advance by their velocities plus the external-load terms; pinned vertex
/// centers and scales are left untouched.
void predict_rod(Rod& rod, const MaterialParams& mat, const Vec3& gravity, double h,
                 const std::vector<Vec3>* force_density, const std::vector<Vec3>* torque,
                 const std::vector<double>* scale_load);

/// Linear-blend warm start: every vertex center is advanced by its bones'
/// relative transform between t_prev and t_new. No-op for rods without bones.
void warm_start_lbs(Rod& rod, std::span<const Bone> bones, double t_prev, double t_new);

class Solver {
 public:
  explicit Solver(Scene scene);

  /// Advances one full time step (settings.dt, possibly multiple substeps).
  /// Throws SimulationError when the state turns non-finite.
  StepReport step();

  /// Runs a single substep with `iterations` correction sweeps, recording the
  /// per-kind elastic residual RMS after every sweep. Row i = after sweep i.
  std::vector<std::vector<double>> probe_convergence(int iterations);

  const Scene& scene() const { return scene_; }
  Scene& scene() { return scene_; }
  const DofLayout& layout() const { return layout_; }
  double time() const { return time_; }
  int step_index() const { return step_index_; }
  int dof_count() const { return layout_.dof_count; }
  ExternalLoads& loads() { return loads_; }
  std::span<const BundleGroup> bundles() const { return groups_; }

  double kinetic_energy() const;
  double total_volume() const;
  double total_rest_volume() const;
  std::vector<Pill> current_pills() const;             // rod pills + kinematic
  std::vector<PillTransform> pill_transforms() const;  // rod pills only

 private:
  struct SavedState {
    std::vector<Vec3> centers;
    std::vector<double> scales;
    std::vector<Quat> frames;
  };

  void animate(double t_new);
  void predict_all(double h, double t_prev, double t_new);
  void append_kinematic_pills(double t, std::vector<Pill>& pills) const;
  void collide(double t_new, StepReport& report);
  StepReport substep(double h, int iterations, std::vector<std::vector<double>>* residual_log);
  void post_step_scales();
  void finalize_velocities(double h);
  double end_of_step_penetration();

  Scene scene_;
  DofLayout layout_;
  std::vector<ConstraintBlock> elastic_;     // fixed topology, per-rod ranges
  std::vector<std::pair<int, int>> rod_block_range_;
  std::vector<ConstraintBlock> pin_blocks_;  // soft pins, fixed topology
  std::vector<Vec3> pin_targets_;
  std::vector<BundleGroup> groups_;
  std::vector<ConstraintBlock> sweep_blocks_;  // per-substep working set
  std::vector<Pill> pills_;                    // per-substep pill snapshot
  std::vector<ConstraintBlock> contact_blocks_;
  std::vector<std::pair<std::uint64_t, double>> warm_alphas_;
  std::vector<double> applied_activation_;  // last amount applied, -1 = never
  std::vector<SavedState> prev_;
  SweepScratch scratch_;
  ExternalLoads loads_;
  double time_ = 0.0;
  int step_index_ = 0;
  bool classic_ = false;
};

}  // namespace vrod
