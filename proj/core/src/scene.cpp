#include "vrod/scene.h"

#include <cmath>
#include <set>
#include <string>

namespace vrod {

void SolverSettings::validate() const {
  require(dt > 0.0 && std::isfinite(dt), "settings.dt must be positive and finite");
  require(iterations >= 1, "settings.iterations must be at least 1");
  require(substeps >= 1, "settings.substeps must be at least 1");
  require(beta > 0.0 && beta <= 1.0, "settings.beta must be in (0, 1]");
  require(gravity.allFinite(), "settings.gravity must be finite");
  require(dichotomous_iterations >= 1, "settings.dichotomous_iterations must be at least 1");
  require(shape_match_period >= 1, "settings.shape_match_period must be at least 1");
  require(contact_stiffness > 0.0, "settings.contact_stiffness must be positive");
  require(velocity_damping >= 0.0 && velocity_damping < 1.0,
          "settings.velocity_damping must be in [0, 1)");
}

Vec3 Bone::position_at(double t) const {
  if (keys.empty()) return Vec3::Zero();
  if (t <= keys.front().t) return keys.front().position;
  if (t >= keys.back().t) return keys.back().position;
  for (std::size_t k = 1; k < keys.size(); ++k) {
    if (t <= keys[k].t) {
      const double span = keys[k].t - keys[k - 1].t;
      const double f = span > 0.0 ? (t - keys[k - 1].t) / span : 1.0;
      return (1.0 - f) * keys[k - 1].position + f * keys[k].position;
    }
  }
  return keys.back().position;
}

Quat Bone::rotation_at(double t) const {
  if (keys.empty()) return Quat::Identity();
  if (t <= keys.front().t) return keys.front().rotation;
  if (t >= keys.back().t) return keys.back().rotation;
  for (std::size_t k = 1; k < keys.size(); ++k) {
    if (t <= keys[k].t) {
      const double span = keys[k].t - keys[k - 1].t;
      const double f = span > 0.0 ? (t - keys[k - 1].t) / span : 1.0;
      return keys[k - 1].rotation.slerp(f, keys[k].rotation);
    }
  }
  return keys.back().rotation;
}

Vec3 PinMotion::position_at(double t) const {
  if (t <= t0) return start;
  if (t >= t1) return target;
  const double f = (t - t0) / (t1 - t0);
  return (1.0 - f) * start + f * target;
}

double Activation::amount_at(double t) const {
  if (t <= t_start) return 0.0;
  if (t >= t_end) return 1.0;
  return (t - t_start) / (t_end - t_start);
}

void Scene::validate() const {
  settings.validate();
  require(!materials.empty(), "scene needs at least one material");
  for (const MaterialParams& mat : materials) mat.validate();

  const int rod_count = static_cast<int>(rods.size());
  for (int r = 0; r < rod_count; ++r) {
    const Rod& rod = rods[r];
    rod.rest.validate();
    const std::string where = "rod " + std::to_string(r);
    require_index(rod.material, static_cast<int>(materials.size()), (where + " material").c_str());
    const int n = rod.rest.vertex_count();
    require(static_cast<int>(rod.pinned.size()) == n, (where + " pinned flags size").c_str());
    require(static_cast<int>(rod.state.centers.size()) == n, (where + " state size").c_str());
    require(static_cast<int>(rod.state.frames.size()) == rod.rest.element_count(),
            (where + " frame count").c_str());
    if (!rod.bones.empty()) {
      require(static_cast<int>(rod.bone_weights.size()) == n,
              (where + " bone weights per vertex").c_str());
      for (int b : rod.bones) {
        require_index(b, static_cast<int>(bones.size()), (where + " bone index").c_str());
      }
      for (int v = 0; v < n; ++v) {
        require(rod.bone_weights[v].size() == rod.bones.size(),
                (where + " bone weight row size").c_str());
        double sum = 0.0;
        for (double w : rod.bone_weights[v]) sum += w;
        require(std::abs(sum - 1.0) < 1e-6, (where + " bone weights must sum to 1").c_str());
      }
    }
  }

  for (const HalfPlane& plane : planes) {
    require(std::abs(plane.normal.norm() - 1.0) < 1e-9, "plane normal must be unit length");
  }
  for (const KinematicPill& kp : kinematic_pills) {
    require(kp.pill.rod < 0, "kinematic pill must not reference a rod");
    require(kp.pill.r0 > 0.0 && kp.pill.r1 > 0.0, "kinematic pill radii must be positive");
    require(kp.pill.c0.allFinite() && kp.pill.c1.allFinite(),
            "kinematic pill centers must be finite");
    require(kp.bone < static_cast<int>(bones.size()), "kinematic pill bone out of range");
    if (kp.bone >= 0) {
      require(!bones[kp.bone].keys.empty(), "kinematic pill bone has no keyframes");
    }
  }

  std::set<std::pair<int, int>> bundle_seen;
  for (const auto& members : bundles) {
    require(members.size() >= 2, "bundle needs at least two members");
    for (const BundleMember& m : members) {
      require_index(m.rod, rod_count, "bundle member rod");
      require_index(m.vertex, rods[m.rod].rest.vertex_count(), "bundle member vertex");
      require(bundle_seen.insert({m.rod, m.vertex}).second,
              "bundle groups must not share a vertex");
    }
  }

  for (const PinMotion& pm : pin_motions) {
    require_index(pm.rod, rod_count, "pin motion rod");
    require_index(pm.vertex, rods[pm.rod].rest.vertex_count(), "pin motion vertex");
    require(rods[pm.rod].pinned[pm.vertex] != 0, "pin motion requires a pinned vertex");
    require(pm.t1 >= pm.t0, "pin motion must have t1 >= t0");
  }
  for (const SoftPin& sp : soft_pins) {
    require_index(sp.rod, rod_count, "soft pin rod");
    require_index(sp.vertex, rods[sp.rod].rest.vertex_count(), "soft pin vertex");
    require(sp.stiffness > 0.0, "soft pin stiffness must be positive");
  }
  for (const Activation& act : activations) {
    require_index(act.rod, rod_count, "activation rod");
    require(act.factor >= 0.0 && act.factor < 1.0, "activation factor must be in [0, 1)");
    require(act.t_end >= act.t_start, "activation must have t_end >= t_start");
    const int m = rods[act.rod].rest.element_count();
    require(act.first_element >= 0 && act.first_element < m, "activation first element");
    require(act.last_element == -1 || (act.last_element >= act.first_element && act.last_element < m),
            "activation last element");
  }
  for (const Probe& probe : probes) {
    require_index(probe.rod, rod_count, "probe rod");
    require_index(probe.vertex, rods[probe.rod].rest.vertex_count(), "probe vertex");
    require(!probe.name.empty(), "probe needs a name");
  }
  if (skin) {
    require(!skin->mesh.vertices.empty(), "skin mesh must have vertices");
    require(skin->max_influences >= 1, "skin max_influences must be at least 1");
    require(skin->epsilon > 0.0, "skin epsilon must be positive");
    require(skin->smooth_iterations >= 0, "skin smooth_iterations must be non-negative");
    for (const auto& tri : skin->mesh.triangles) {
      for (int k = 0; k < 3; ++k) {
        require_index(tri[k], static_cast<int>(skin->mesh.vertices.size()), "skin triangle index");
      }
    }
    require(!rods.empty(), "skin requires rods to bind to");
  }
}

}  // namespace vrod
