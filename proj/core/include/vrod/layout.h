#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vrod/rod.h"

namespace vrod {

/// Global DOF indexing and lumped inertia for a set of rods. Vertex DOFs
/// (center, scale) and element DOFs (orientation) get contiguous global
/// slots per rod. Weights are the block-diagonal inertia entries: centers
/// pi*r^2*rho, scales pi*r^4*rho/2, orientations rho*s^2*pi*r^4*(1/4,1/4,1/2),
/// each multiplied by the lumped as-built element length. Pinned vertices are
/// kinematic: their inverse weights are zero.
struct DofLayout {
  std::vector<int> vertex_base;   // per rod
  std::vector<int> element_base;  // per rod
  int total_vertices = 0;
  int total_elements = 0;
  int dof_count = 0;  // 4 per vertex + 3 per element, pinned included

  std::vector<double> center_weight;  // per global vertex; +inf when pinned
  std::vector<double> scale_weight;   // per global vertex; +inf when pinned
  std::vector<Vec3> theta_weight;     // per global element, body-frame diagonal

  std::vector<double> inv_center;  // 0 when pinned
  std::vector<double> inv_scale;   // 0 when pinned
  std::vector<Vec3> inv_theta;
  std::vector<std::uint8_t> pinned;  // per global vertex

  // Reverse maps, global slot -> owner.
  std::vector<int> vertex_rod;
  std::vector<int> vertex_local;
  std::vector<int> element_rod;
  std::vector<int> element_local;

  int vertex_slot(int rod, int vertex) const { return vertex_base[rod] + vertex; }
  int element_slot(int rod, int element) const { return element_base[rod] + element; }
};

DofLayout build_layout(std::span<const Rod> rods, std::span<const MaterialParams> materials);

/// Re-evaluates the orientation inertia from the current midpoint scales.
/// Call once per substep; center and scale weights are constant.
void refresh_orientation_inertia(DofLayout& layout, std::span<const Rod> rods,
                                 std::span<const MaterialParams> materials);

}  // namespace vrod
