#pragma once

#include <span>
#include <vector>

#include "vrod/rod.h"

namespace vrod {

/// One rod vertex participating in a shape-matching group. The orientation
/// sampled for vertex v is the frame of element min(v, m-1).
struct BundleMember {
  int rod = 0;
  int vertex = 0;
};

/// Similarity transform x -> scale * rotation * x + translation.
struct SimilarityFit {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  bool degenerate = false;
};

/// Shape-matching group over rod vertices. Rest data is cached (positions
/// centered on the rest centroid) and the rotation extraction is
/// warm-started from the previous fit.
struct BundleGroup {
  std::vector<BundleMember> members;
  std::vector<Vec3> rest_centers;    // centered on rest_centroid
  std::vector<double> rest_scales;
  std::vector<Mat3> rest_frames;
  Vec3 rest_centroid = Vec3::Zero();
  double rest_denominator = 0.0;     // sum of squared rest coordinate norms
  Quat warm_rotation = Quat::Identity();
};

BundleGroup make_bundle_group(std::span<const Rod> rods, std::vector<BundleMember> members);

/// Robust iterative extraction of the rotational part of `covariance`,
/// warm-started at `guess`.
Quat extract_rotation(const Mat3& covariance, const Quat& guess, int max_iterations = 100,
                      double tolerance = 1e-9);

/// Best similarity transform from the group's rest configuration onto the
/// current one, over positions, scales and frames jointly. Updates the
/// group's warm rotation.
SimilarityFit fit_similarity(BundleGroup& group, std::span<const Rod> rods);

/// Hard projection of the group onto the fitted transform: centers to
/// s*R*cbar + t, scales to s*sbar, frames to R*Rbar. Pinned vertices keep
/// their center and scale (frames are always written). Returns the fit.
SimilarityFit apply_shape_match(BundleGroup& group, std::span<Rod> rods);

/// Sum of squared deviations between the group's current generalized
/// coordinates (scaled frame columns and centered positions) and the
/// similarity-transformed rest coordinates. Zero right after a hard
/// projection with the same fit.
double shape_energy(const BundleGroup& group, std::span<const Rod> rods,
                    const SimilarityFit& fit);

/// Minimum-cost perfect matching on a square cost matrix; returns the
/// assigned column per row.
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

/// Point correspondence across ordered cross-section slices. Slice 0 keeps
/// its order; every later slice is matched to its predecessor by minimum
/// total squared distance; matches compose into one polyline per strand.
struct CombResult {
  // permutations[i][k] = index into slices[i] of strand k's point.
  std::vector<std::vector<int>> permutations;
  std::vector<std::vector<Vec3>> polylines;  // K polylines of M points each
};

CombResult comb_slices(std::span<const std::vector<Vec3>> slices);

}  // namespace vrod
