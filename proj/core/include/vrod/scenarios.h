#pragma once

#include <string>
#include <vector>

#include "vrod/scene.h"

namespace vrod {

/// Switches shared by the built-in scenes. `quiet` builds the scenario's
/// equilibrium variant: no initial perturbation, no pin motion, no
/// activation. `zero_gravity` turns gravity off where the scenario would
/// otherwise use it.
struct ScenarioOptions {
  bool quiet = false;
  bool zero_gravity = false;
};

/// Rod pinned at both ends whose pins pull apart to twice the rest length
/// over one second, volume stiffness dominant.
Scene scenario_stretch(const ScenarioOptions& opts = {});

/// Stretch variant with the pins already displaced (instantaneous jump),
/// for per-iteration convergence probing.
Scene scenario_stretch_instant();

/// Pinned rod carrying a scale-velocity pulse: a volumetric wave travels
/// while the centerline endpoints stay put.
Scene scenario_wave(const ScenarioOptions& opts = {});

/// Free rod dropped onto the floor half-plane.
Scene scenario_floor(const ScenarioOptions& opts = {});

/// Free rod whose fibers shorten 20%, bulging by volume conservation.
Scene scenario_activation(const ScenarioOptions& opts = {});

/// Scale-perturbed pinned rod, full model: the scale wave propagates.
Scene scenario_bergou(const ScenarioOptions& opts = {});

/// Same initial conditions with the post-step length-ratio scale baseline.
Scene scenario_bergou_baseline(const ScenarioOptions& opts = {});

/// Three parallel rods bundled by shape matching, skinned with a tube mesh,
/// swinging from pinned tops.
Scene scenario_band(const ScenarioOptions& opts = {});

/// 135 ten-element rods (9990 DOFs) falling onto the floor; throughput scene.
Scene scenario_bench(const ScenarioOptions& opts = {});

std::vector<std::string> builtin_scenario_names();
bool is_builtin_scenario(const std::string& name);
/// Throws std::invalid_argument for unknown names.
Scene make_builtin_scenario(const std::string& name, const ScenarioOptions& opts = {});

}  // namespace vrod
