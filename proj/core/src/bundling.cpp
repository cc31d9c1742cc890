#include "vrod/bundling.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrod {

namespace {

inline int member_element(const Rod& rod, int vertex) {
  return std::min(vertex, rod.rest.element_count() - 1);
}

}  // namespace

BundleGroup make_bundle_group(std::span<const Rod> rods, std::vector<BundleMember> members) {
  require(!members.empty(), "bundle group needs at least one member");
  BundleGroup group;
  group.members = std::move(members);
  const int n = static_cast<int>(group.members.size());

  Vec3 centroid = Vec3::Zero();
  for (const BundleMember& m : group.members) {
    require_index(m.rod, static_cast<int>(rods.size()), "bundle member rod");
    require_index(m.vertex, rods[m.rod].rest.vertex_count(), "bundle member vertex");
    centroid += rods[m.rod].rest.centers[m.vertex];
  }
  centroid /= n;
  group.rest_centroid = centroid;

  group.rest_centers.reserve(group.members.size());
  group.rest_scales.reserve(group.members.size());
  group.rest_frames.reserve(group.members.size());
  double denom = 0.0;
  for (const BundleMember& m : group.members) {
    const Rod& rod = rods[m.rod];
    const Vec3 c = rod.rest.centers[m.vertex] - centroid;
    const double s = rod.rest.scales[m.vertex];
    const Mat3 R = rod.rest.frames[member_element(rod, m.vertex)].toRotationMatrix();
    group.rest_centers.push_back(c);
    group.rest_scales.push_back(s);
    group.rest_frames.push_back(R);
    denom += c.squaredNorm() + 3.0 * s * s;  // ||s*R||_F^2 = 3 s^2
  }
  group.rest_denominator = denom;
  return group;
}

Quat extract_rotation(const Mat3& covariance, const Quat& guess, int max_iterations,
                      double tolerance) {
  Quat q = guess.normalized();
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Mat3 R = q.toRotationMatrix();
    Vec3 omega = Vec3::Zero();
    double dot = 0.0;
    for (int a = 0; a < 3; ++a) {
      omega += R.col(a).cross(covariance.col(a));
      dot += R.col(a).dot(covariance.col(a));
    }
    omega /= std::abs(dot) + 1e-9;
    const double angle = omega.norm();
    if (angle < tolerance) break;
    q = (Quat(Eigen::AngleAxisd(angle, omega / angle)) * q).normalized();
  }
  return q;
}

SimilarityFit fit_similarity(BundleGroup& group, std::span<const Rod> rods) {
  const int n = static_cast<int>(group.members.size());
  SimilarityFit fit;

  Vec3 centroid = Vec3::Zero();
  for (const BundleMember& m : group.members) centroid += rods[m.rod].state.centers[m.vertex];
  centroid /= n;

  Mat3 B = Mat3::Zero();
  for (int i = 0; i < n; ++i) {
    const BundleMember& m = group.members[i];
    const Rod& rod = rods[m.rod];
    const Vec3 c = rod.state.centers[m.vertex] - centroid;
    const double s = rod.state.scales[m.vertex];
    const Mat3 R = rod.state.frames[member_element(rod, m.vertex)].toRotationMatrix();
    B.noalias() += (s * group.rest_scales[i]) * R * group.rest_frames[i].transpose();
    B.noalias() += c * group.rest_centers[i].transpose();
  }

  if (B.norm() < 1e-12 || group.rest_denominator < 1e-300) {
    fit.degenerate = true;
    fit.translation = centroid - group.rest_centroid;
    return fit;
  }

  group.warm_rotation = extract_rotation(B, group.warm_rotation);
  fit.rotation = group.warm_rotation.toRotationMatrix();

  // Optimal uniform scale: projection of the current coordinates onto the
  // rotated rest coordinates, normalized by the rest magnitude.
  double numer = 0.0;
  for (int i = 0; i < n; ++i) {
    const BundleMember& m = group.members[i];
    const Rod& rod = rods[m.rod];
    const Vec3 c = rod.state.centers[m.vertex] - centroid;
    const double s = rod.state.scales[m.vertex];
    const Mat3 R = rod.state.frames[member_element(rod, m.vertex)].toRotationMatrix();
    numer += (s * group.rest_scales[i]) * (fit.rotation * group.rest_frames[i])
                 .cwiseProduct(R)
                 .sum();
    numer += c.dot(fit.rotation * group.rest_centers[i]);
  }
  fit.scale = std::max(numer / group.rest_denominator, kMinScale);
  fit.translation = centroid - fit.scale * (fit.rotation * group.rest_centroid);
  return fit;
}

SimilarityFit apply_shape_match(BundleGroup& group, std::span<Rod> rods) {
  const SimilarityFit fit = fit_similarity(group, rods);
  if (fit.degenerate) return fit;
  const int n = static_cast<int>(group.members.size());
  for (int i = 0; i < n; ++i) {
    const BundleMember& m = group.members[i];
    Rod& rod = rods[m.rod];
    const int e = member_element(rod, m.vertex);
    if (!rod.pinned[m.vertex]) {
      rod.state.centers[m.vertex] =
          fit.scale * (fit.rotation * (group.rest_centers[i] + group.rest_centroid)) +
          fit.translation;
      rod.state.scales[m.vertex] = std::max(fit.scale * group.rest_scales[i], kMinScale);
    }
    rod.state.frames[e] = (Quat(fit.rotation) * Quat(group.rest_frames[i])).normalized();
  }
  return fit;
}

double shape_energy(const BundleGroup& group, std::span<const Rod> rods,
                    const SimilarityFit& fit) {
  const int n = static_cast<int>(group.members.size());
  Vec3 centroid = Vec3::Zero();
  for (const BundleMember& m : group.members) centroid += rods[m.rod].state.centers[m.vertex];
  centroid /= n;

  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    const BundleMember& m = group.members[i];
    const Rod& rod = rods[m.rod];
    const Vec3 c = rod.state.centers[m.vertex] - centroid;
    const double s = rod.state.scales[m.vertex];
    const Mat3 R = rod.state.frames[member_element(rod, m.vertex)].toRotationMatrix();
    energy += (c - fit.scale * (fit.rotation * group.rest_centers[i])).squaredNorm();
    energy += (s * R - fit.scale * (fit.rotation * group.rest_frames[i]) * group.rest_scales[i])
                  .squaredNorm();
  }
  return energy;
}

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  require(n > 0, "assignment needs a non-empty cost matrix");
  for (const auto& row : cost) {
    require(static_cast<int>(row.size()) == n, "assignment cost matrix must be square");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Shortest augmenting path with dual potentials, O(n^3).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j) {
    if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
  }
  return row_to_col;
}

CombResult comb_slices(std::span<const std::vector<Vec3>> slices) {
  require(!slices.empty(), "comb needs at least one slice");
  const int slice_count = static_cast<int>(slices.size());
  const int k = static_cast<int>(slices[0].size());
  require(k > 0, "comb slices must be non-empty");
  for (const auto& s : slices) {
    require(static_cast<int>(s.size()) == k, "comb slices must all have the same size");
  }

  CombResult result;
  result.permutations.resize(slice_count);
  result.permutations[0].resize(k);
  for (int i = 0; i < k; ++i) result.permutations[0][i] = i;

  std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
  for (int slice = 1; slice < slice_count; ++slice) {
    const std::vector<int>& prev = result.permutations[slice - 1];
    for (int strand = 0; strand < k; ++strand) {
      const Vec3& anchor = slices[slice - 1][prev[strand]];
      for (int j = 0; j < k; ++j) {
        cost[strand][j] = (slices[slice][j] - anchor).squaredNorm();
      }
    }
    result.permutations[slice] = solve_assignment(cost);
  }

  result.polylines.assign(k, std::vector<Vec3>(slice_count));
  for (int strand = 0; strand < k; ++strand) {
    for (int slice = 0; slice < slice_count; ++slice) {
      result.polylines[strand][slice] = slices[slice][result.permutations[slice][strand]];
    }
  }
  return result;
}

}  // namespace vrod
