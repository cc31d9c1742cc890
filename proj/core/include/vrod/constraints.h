#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrod/collision.h"
#include "vrod/layout.h"
#include "vrod/rod.h"

namespace vrod {

enum class ConstraintKind : std::uint8_t {
  kStretchZ = 0,       // axial stretch, 3 components
  kCrossSection,       // midpoint scale vs rest, scalar
  kSurfaceStretch,     // scale first difference vs rest, scalar
  kBendTwist,          // scale-weighted Darboux vs rest, 3 components
  kSurfaceBending,     // scale second difference vs rest, scalar
  kVolumeStretch,      // s^2-weighted axial stretch vs rest, 3 components
  kVolumeBendU,        // s^3-weighted bending component u, scalar
  kVolumeBendV,        // s^3-weighted bending component v, scalar
  kContact,            // pill pair separation, unilateral scalar
  kHalfPlane,          // vertex sphere vs plane, unilateral scalar
  kPin,                // vertex center vs target, 3 components
};

inline constexpr int kElasticKindCount = 8;
inline constexpr int kKindCount = 11;

const char* kind_name(ConstraintKind kind);
int residual_dim(ConstraintKind kind);

/// One compliant constraint. `stiffness` is the diagonal of the constraint's
/// stiffness block (geometry factors and length weight included); an infinite
/// entry makes that component rigid, a zero entry disables it.
struct ConstraintBlock {
  ConstraintKind kind = ConstraintKind::kStretchZ;
  bool unilateral = false;
  int rod = -1;    // owner rod (elastic, half-plane, pin)
  int loc = -1;    // element index or vertex index, by kind
  int aux = -1;    // half-plane: plane index; pin: pin index; contact: pill b
  int pill_a = -1; // contact: pill a
  double alpha = 0.0;  // contact axis parameters, frozen for the step
  double beta = 0.0;
  Vec3 stiffness = Vec3::Zero();
  Vec3 lambda = Vec3::Zero();
};

/// Residual and sparse Jacobian of one constraint at the current state.
/// Jacobian storage: row d of each matrix (or entry d of each vector) is
/// dW_d/dx for residual component d. Orientation columns are body-frame
/// right-increment derivatives. Slots are global layout slots; kinematic
/// endpoints are simply not emitted.
struct ResidualEval {
  int dim = 1;
  Vec3 W = Vec3::Zero();
  int n_centers = 0;
  int n_scales = 0;
  int n_thetas = 0;
  int center_slot[4] = {-1, -1, -1, -1};
  int scale_slot[4] = {-1, -1, -1, -1};
  int theta_slot[2] = {-1, -1};
  Mat3 center_jac[4];
  Vec3 scale_jac[4];
  Mat3 theta_jac[2];
};

/// Everything constraint evaluation needs to see. `pills` is the step's pill
/// array (contacts reference it); rod pills read live state through `rods`,
/// kinematic pills use the stored geometry. `classic_scales` makes bend/twist
/// read rest scales (scale-free rod mode).
struct EvalContext {
  std::span<const Rod> rods;
  const DofLayout* layout = nullptr;
  std::span<const Pill> pills;
  std::span<const HalfPlane> planes;
  std::span<const Vec3> pin_targets;
  bool classic_scales = false;
};

ResidualEval eval_constraint(const ConstraintBlock& block, const EvalContext& ctx);

/// Options for elastic assembly. Scale-coupled kinds are dropped in classic
/// rod mode.
struct AssemblyOptions {
  bool include_scale_kinds = true;
};

/// Builds the elastic constraint blocks of one rod (fixed topology). Blocks
/// whose stiffness is identically zero are not emitted.
std::vector<ConstraintBlock> assemble_rod_constraints(const Rod& rod, const MaterialParams& mat,
                                                      int rod_index,
                                                      const AssemblyOptions& opts = {});

/// Recomputes the stiffness blocks in place (after activation changed the
/// strain rest lengths). Block set and order are preserved.
void refresh_stiffness(std::span<ConstraintBlock> blocks, std::span<const Rod> rods,
                       std::span<const MaterialParams> materials);

/// Scratch buffers for Jacobi sweeps, sized to a layout.
struct SweepScratch {
  std::vector<Vec3> center_sum;
  std::vector<double> scale_sum;
  std::vector<Vec3> theta_sum;
  std::vector<int> center_count;
  std::vector<int> scale_count;
  std::vector<int> theta_count;
  void resize(const DofLayout& layout);
};

struct SweepOutcome {
  int active = 0;             // constraints that produced an update
  int skipped_singular = 0;   // all-kinematic rigid constraints
};

/// One Jacobi sweep of the generalized compliant update over `blocks`:
/// every delta-lambda is computed against the same state snapshot,
/// accumulated per DOF, averaged by the number of touching constraints and
/// applied once. beta scales delta-lambda. Unilateral constraints are active
/// only on the violation side (lambda clamped to <= 0). After the sweep,
/// scales are clamped to the minimum scale and frames renormalized.
/// Throws SimulationError on a non-finite update, naming the constraint.
SweepOutcome jacobi_sweep(std::span<ConstraintBlock> blocks, std::span<Rod> rods,
                          const EvalContext& ctx, double h, double beta,
                          SweepScratch& scratch);

/// Length-weighted RMS residual per elastic kind (index by ConstraintKind).
/// Contacts, half-planes and pins are not included.
std::vector<double> elastic_residual_norms(std::span<const ConstraintBlock> blocks,
                                           const EvalContext& ctx);

}  // namespace vrod
