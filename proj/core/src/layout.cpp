#include "vrod/layout.h"

#include <limits>

namespace vrod {

DofLayout build_layout(std::span<const Rod> rods, std::span<const MaterialParams> materials) {
  DofLayout layout;
  const int nrods = static_cast<int>(rods.size());
  layout.vertex_base.resize(nrods);
  layout.element_base.resize(nrods);
  for (int r = 0; r < nrods; ++r) {
    layout.vertex_base[r] = layout.total_vertices;
    layout.element_base[r] = layout.total_elements;
    layout.total_vertices += rods[r].rest.vertex_count();
    layout.total_elements += rods[r].rest.element_count();
  }
  layout.dof_count = 4 * layout.total_vertices + 3 * layout.total_elements;

  layout.center_weight.assign(layout.total_vertices, 0.0);
  layout.scale_weight.assign(layout.total_vertices, 0.0);
  layout.inv_center.assign(layout.total_vertices, 0.0);
  layout.inv_scale.assign(layout.total_vertices, 0.0);
  layout.pinned.assign(layout.total_vertices, 0);
  layout.theta_weight.assign(layout.total_elements, Vec3::Zero());
  layout.inv_theta.assign(layout.total_elements, Vec3::Zero());
  layout.vertex_rod.resize(layout.total_vertices);
  layout.vertex_local.resize(layout.total_vertices);
  layout.element_rod.resize(layout.total_elements);
  layout.element_local.resize(layout.total_elements);
  for (int r = 0; r < nrods; ++r) {
    for (int v = 0; v < rods[r].rest.vertex_count(); ++v) {
      layout.vertex_rod[layout.vertex_slot(r, v)] = r;
      layout.vertex_local[layout.vertex_slot(r, v)] = v;
    }
    for (int e = 0; e < rods[r].rest.element_count(); ++e) {
      layout.element_rod[layout.element_slot(r, e)] = r;
      layout.element_local[layout.element_slot(r, e)] = e;
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (int r = 0; r < nrods; ++r) {
    const Rod& rod = rods[r];
    const RodRestPose& rest = rod.rest;
    const double rho = materials[rod.material].density;
    const int n = rest.vertex_count();
    for (int v = 0; v < n; ++v) {
      // Lumped length: half of each incident as-built element.
      double lump = 0.0;
      if (v > 0) lump += 0.5 * rest.initial_lengths[v - 1];
      if (v < n - 1) lump += 0.5 * rest.initial_lengths[v];
      const double rbar = rest.radii[v];
      const int slot = layout.vertex_slot(r, v);
      const bool pin = !rod.pinned.empty() && rod.pinned[v] != 0;
      layout.pinned[slot] = pin ? 1 : 0;
      if (pin) {
        layout.center_weight[slot] = kInf;
        layout.scale_weight[slot] = kInf;
        layout.inv_center[slot] = 0.0;
        layout.inv_scale[slot] = 0.0;
      } else {
        const double cw = kPi * rbar * rbar * rho * lump;
        const double sw = 0.5 * kPi * rbar * rbar * rbar * rbar * rho * lump;
        layout.center_weight[slot] = cw;
        layout.scale_weight[slot] = sw;
        layout.inv_center[slot] = 1.0 / cw;
        layout.inv_scale[slot] = 1.0 / sw;
      }
    }
  }
  refresh_orientation_inertia(layout, rods, materials);
  return layout;
}

void refresh_orientation_inertia(DofLayout& layout, std::span<const Rod> rods,
                                 std::span<const MaterialParams> materials) {
  for (int r = 0; r < static_cast<int>(rods.size()); ++r) {
    const Rod& rod = rods[r];
    const RodRestPose& rest = rod.rest;
    const double rho = materials[rod.material].density;
    for (int e = 0; e < rest.element_count(); ++e) {
      const double rbar = 0.5 * (rest.radii[e] + rest.radii[e + 1]);
      const double smid = 0.5 * (rod.state.scales[e] + rod.state.scales[e + 1]);
      const double r4 = kPi * rbar * rbar * rbar * rbar;
      const double base = rho * smid * smid * r4 * rest.initial_lengths[e];
      const Vec3 w(0.25 * base, 0.25 * base, 0.5 * base);
      const int slot = layout.element_slot(r, e);
      layout.theta_weight[slot] = w;
      layout.inv_theta[slot] = w.cwiseInverse();
    }
  }
}

}  // namespace vrod
