#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "vrod/rod.h"

namespace vrod {

/// A tapered capsule: the convex hull of two spheres. Rod pills carry their
/// owner so contacts can address the owner's DOFs; kinematic pills have
/// rod == -1. Pills of equal non-negative `group` never collide (used to turn
/// off intra-bundle contacts).
struct Pill {
  Vec3 c0 = Vec3::Zero();
  Vec3 c1 = Vec3::Zero();
  double r0 = 0.0;
  double r1 = 0.0;
  int rod = -1;
  int element = -1;
  int group = -1;
  bool self_collide = false;
};

/// Ground/wall constraint: points x with n.x - offset >= clearance are free.
struct HalfPlane {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

/// Result of projecting a point onto a pill's surface. `t` parametrizes the
/// axis (0 at c0, 1 at c1); `distance` is signed (negative inside);
/// `degenerate` marks pills where one sphere swallows the other and the
/// sphere-only fallback was used.
struct PillProjection {
  double t = 0.0;
  double distance = 0.0;
  bool degenerate = false;
};

/// Closest point between two pill axes in the pills' distance metric.
/// `distance` is the signed surface distance at (alpha, beta); negative
/// means the pills overlap.
struct PillOverlap {
  double alpha = 0.0;
  double beta = 0.0;
  double distance = 0.0;
};

/// Candidate contact pair surviving the narrow phase with penetration.
struct ContactData {
  int pill_a = -1;
  int pill_b = -1;
  double alpha = 0.0;
  double beta = 0.0;
  double distance = 0.0;
};

/// Closed-form signed distance from a point to a tapered capsule, minimized
/// over the axis parameter. Exact; falls back to the covering sphere when one
/// end sphere contains the other.
PillProjection pill_project(const Vec3& x, const Pill& pill);

/// Signed distance helper at a fixed axis parameter t.
double pill_distance_at(const Vec3& x, const Pill& pill, double t);

/// Deepest-penetration search between two pills: dichotomous interval shrink
/// over alpha with the closed-form projection as the inner solve. The pair is
/// canonicalized internally so swapping arguments returns exactly swapped
/// parameters. `warm_alpha` (in [0,1]) is compared against the search result
/// and the better point wins.
PillOverlap deepest_penetration(const Pill& a, const Pill& b, int iterations = 10,
                                double warm_alpha = -1.0);

/// Tightest sphere covering both end spheres.
void bounding_sphere(const Pill& pill, Vec3& center, double& radius);

/// Uniform-grid broad phase over pill bounding spheres. Cell width is the
/// diameter of the largest bounding sphere; candidate pairs are all pills
/// whose cells lie within a 3x3x3 neighborhood. Returns unordered pairs
/// (i < j), deterministic order, with owner/group filtering applied:
/// same-rod pairs are kept only for self-colliding rods and never for
/// adjacent elements; equal non-negative groups are skipped, as are pairs of
/// two kinematic pills.
std::vector<std::pair<int, int>> broad_phase(std::span<const Pill> pills);

/// Narrow phase: runs the deepest-penetration search on each candidate pair
/// and keeps contacts with negative distance. `warm` maps a pair key from the
/// previous step to its alpha (may be null).
std::vector<ContactData> find_contacts(std::span<const Pill> pills,
                                       std::span<const std::pair<int, int>> pairs,
                                       int dichotomous_iterations,
                                       const std::vector<std::pair<std::uint64_t, double>>* warm = nullptr);

/// Stable key for a pill pair, usable for warm starting across steps.
std::uint64_t pair_key(const Pill& a, const Pill& b);

/// World-space pills of every rod element, rods in order, elements in order.
/// World radii are scale * rest radius at each end vertex.
std::vector<Pill> rod_pills(std::span<const Rod> rods);

}  // namespace vrod
