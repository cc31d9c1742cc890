#include "vrod/solver.h"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "vrod/layout.h"

namespace vrod {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

void predict_rod(Rod& rod, const MaterialParams& mat, const Vec3& gravity, double h,
                 const std::vector<Vec3>* force_density, const std::vector<Vec3>* torque,
                 const std::vector<double>* scale_load) {
  const int n = rod.rest.vertex_count();
  const int m = rod.rest.element_count();
  const double h2 = h * h;
  const double rho = mat.density;

  for (int v = 0; v < n; ++v) {
    if (rod.pinned[v]) continue;
    Vec3 accel = gravity;
    if (force_density) {
      require((*force_density)[v].allFinite(), "external force must be finite");
      accel += (*force_density)[v] / rho;
    }
    rod.state.centers[v] += h * rod.state.center_vel[v] + h2 * accel;

    double ds = h * rod.state.scale_vel[v];
    if (scale_load) {
      // Scale loads live on elements; a vertex feels the mean of its
      // incident elements.
      double gamma = 0.0;
      int count = 0;
      if (v > 0) {
        gamma += (*scale_load)[v - 1];
        ++count;
      }
      if (v < m) {
        gamma += (*scale_load)[v];
        ++count;
      }
      gamma /= count;
      require(std::isfinite(gamma), "external scale load must be finite");
      const double r = rod.rest.radii[v];
      ds += 2.0 * h2 * gamma / (kPi * r * r * r * r * rho);
    }
    rod.state.scales[v] = std::max(rod.state.scales[v] + ds, kMinScale);
  }

  for (int e = 0; e < m; ++e) {
    Vec3 dtheta = h * rod.state.angular_vel[e];
    if (torque) {
      require((*torque)[e].allFinite(), "external torque must be finite");
      const double smid = 0.5 * (rod.state.scales[e] + rod.state.scales[e + 1]);
      const double rmid = 0.5 * (rod.rest.radii[e] + rod.rest.radii[e + 1]);
      const double r4 = rmid * rmid * rmid * rmid;
      const Vec3 body_torque = rod.state.frames[e].conjugate() * (*torque)[e];
      const Vec3 inv_inertia(4.0 / (kPi * r4), 4.0 / (kPi * r4), 2.0 / (kPi * r4));
      dtheta += (h2 / (smid * smid * rho)) * inv_inertia.cwiseProduct(body_torque);
    }
    rod.state.frames[e] = apply_increment(rod.state.frames[e], dtheta);
  }
}

void warm_start_lbs(Rod& rod, std::span<const Bone> bones, double t_prev, double t_new) {
  if (rod.bones.empty()) return;
  const int n = rod.rest.vertex_count();
  const int b_count = static_cast<int>(rod.bones.size());

  std::vector<Quat> rot_prev(b_count), rot_new(b_count);
  std::vector<Vec3> pos_prev(b_count), pos_new(b_count);
  for (int b = 0; b < b_count; ++b) {
    const Bone& bone = bones[rod.bones[b]];
    rot_prev[b] = bone.rotation_at(t_prev);
    rot_new[b] = bone.rotation_at(t_new);
    pos_prev[b] = bone.position_at(t_prev);
    pos_new[b] = bone.position_at(t_new);
  }

  for (int v = 0; v < n; ++v) {
    if (rod.pinned[v]) continue;
    const Vec3 c = rod.state.centers[v];
    Vec3 blended = Vec3::Zero();
    for (int b = 0; b < b_count; ++b) {
      const Quat delta = rot_new[b] * rot_prev[b].conjugate();
      blended += rod.bone_weights[v][b] * (delta * (c - pos_prev[b]) + pos_new[b]);
    }
    rod.state.centers[v] = blended;
  }
}

Solver::Solver(Scene scene) : scene_(std::move(scene)) {
  scene_.validate();
  classic_ = scene_.settings.scale_mode == ScaleMode::kPostStepLengthRatio;
  layout_ = build_layout(scene_.rods, scene_.materials);
  if (classic_) {
    // The baseline rod has no scale dynamics: scale DOFs are kinematic.
    std::fill(layout_.inv_scale.begin(), layout_.inv_scale.end(), 0.0);
  }
  scratch_.resize(layout_);

  const AssemblyOptions opts{.include_scale_kinds = !classic_};
  for (int r = 0; r < static_cast<int>(scene_.rods.size()); ++r) {
    const int begin = static_cast<int>(elastic_.size());
    auto blocks = assemble_rod_constraints(scene_.rods[r], scene_.materials[scene_.rods[r].material],
                                           r, opts);
    elastic_.insert(elastic_.end(), blocks.begin(), blocks.end());
    rod_block_range_.emplace_back(begin, static_cast<int>(elastic_.size()));
  }

  for (int i = 0; i < static_cast<int>(scene_.soft_pins.size()); ++i) {
    const SoftPin& sp = scene_.soft_pins[i];
    ConstraintBlock block;
    block.kind = ConstraintKind::kPin;
    block.rod = sp.rod;
    block.loc = sp.vertex;
    block.aux = i;
    block.stiffness = Vec3::Constant(sp.stiffness);
    pin_blocks_.push_back(block);
    pin_targets_.push_back(sp.target);
  }

  for (const auto& members : scene_.bundles) {
    groups_.push_back(make_bundle_group(scene_.rods, members));
  }
}

void Solver::animate(double t_new) {
  for (const PinMotion& pm : scene_.pin_motions) {
    scene_.rods[pm.rod].state.centers[pm.vertex] = pm.position_at(t_new);
  }
  applied_activation_.resize(scene_.activations.size(), -1.0);
  for (std::size_t i = 0; i < scene_.activations.size(); ++i) {
    const Activation& act = scene_.activations[i];
    const double a = act.amount_at(t_new);
    if (a == applied_activation_[i]) continue;
    apply_activation(scene_.rods[act.rod].rest, a, act.factor, act.first_element,
                     act.last_element);
    applied_activation_[i] = a;
    const auto [begin, end] = rod_block_range_[act.rod];
    refresh_stiffness(std::span<ConstraintBlock>(elastic_.data() + begin, end - begin),
                      scene_.rods, scene_.materials);
  }
}

void Solver::predict_all(double h, double t_prev, double t_new) {
  const bool has_loads = !loads_.force_density.empty() || !loads_.torque.empty() ||
                         !loads_.scale_load.empty();
  for (int r = 0; r < static_cast<int>(scene_.rods.size()); ++r) {
    Rod& rod = scene_.rods[r];
    const std::vector<Vec3>* fd = nullptr;
    const std::vector<Vec3>* tq = nullptr;
    const std::vector<double>* sl = nullptr;
    if (has_loads) {
      if (r < static_cast<int>(loads_.force_density.size()) && !loads_.force_density[r].empty())
        fd = &loads_.force_density[r];
      if (r < static_cast<int>(loads_.torque.size()) && !loads_.torque[r].empty())
        tq = &loads_.torque[r];
      if (r < static_cast<int>(loads_.scale_load.size()) && !loads_.scale_load[r].empty())
        sl = &loads_.scale_load[r];
    }
    if (classic_) sl = nullptr;
    predict_rod(rod, scene_.materials[rod.material], scene_.settings.gravity, h, fd, tq, sl);
    if (classic_) {
      // Frozen scale DOFs: undo any drift from the prediction above.
      for (int v = 0; v < rod.rest.vertex_count(); ++v) rod.state.scale_vel[v] = 0.0;
    }
    warm_start_lbs(rod, scene_.bones, t_prev, t_new);
    for (const Vec3& c : rod.state.centers) {
      if (!c.allFinite()) throw SimulationError("non-finite prediction in rod " + std::to_string(r));
    }
  }
}

void Solver::append_kinematic_pills(double t, std::vector<Pill>& pills) const {
  for (const KinematicPill& kp : scene_.kinematic_pills) {
    Pill posed = kp.pill;
    if (kp.bone >= 0) {
      const Bone& bone = scene_.bones[kp.bone];
      const Quat rot = bone.rotation_at(t);
      const Vec3 pos = bone.position_at(t);
      posed.c0 = rot * posed.c0 + pos;
      posed.c1 = rot * posed.c1 + pos;
    }
    pills.push_back(posed);
  }
}

void Solver::collide(double t_new, StepReport& report) {
  const auto broad_start = Clock::now();
  pills_ = rod_pills(scene_.rods);
  append_kinematic_pills(t_new, pills_);
  const auto pairs = broad_phase(pills_);
  report.broad_pairs += static_cast<int>(pairs.size());
  report.timings.broad_ms += ms_since(broad_start);

  const auto narrow_start = Clock::now();
  const auto contacts = find_contacts(pills_, pairs, scene_.settings.dichotomous_iterations,
                                      &warm_alphas_);
  warm_alphas_.clear();
  contact_blocks_.clear();
  for (const ContactData& contact : contacts) {
    warm_alphas_.emplace_back(pair_key(pills_[contact.pill_a], pills_[contact.pill_b]),
                              contact.alpha);
    ConstraintBlock block;
    block.kind = ConstraintKind::kContact;
    block.unilateral = true;
    block.pill_a = contact.pill_a;
    block.aux = contact.pill_b;
    block.alpha = contact.alpha;
    block.beta = contact.beta;
    block.stiffness = Vec3(scene_.settings.contact_stiffness, 0, 0);
    contact_blocks_.push_back(block);
  }
  report.contact_count += static_cast<int>(contact_blocks_.size());

  // Half-plane constraints for every vertex whose predicted sphere is within
  // half a radius of a plane.
  for (int p = 0; p < static_cast<int>(scene_.planes.size()); ++p) {
    const HalfPlane& plane = scene_.planes[p];
    for (int r = 0; r < static_cast<int>(scene_.rods.size()); ++r) {
      const Rod& rod = scene_.rods[r];
      for (int v = 0; v < rod.rest.vertex_count(); ++v) {
        const double world_r = rod.state.scales[v] * rod.rest.radii[v];
        const double clearance =
            plane.normal.dot(rod.state.centers[v]) - plane.offset - world_r;
        if (clearance < 0.5 * world_r) {
          ConstraintBlock block;
          block.kind = ConstraintKind::kHalfPlane;
          block.unilateral = true;
          block.rod = r;
          block.loc = v;
          block.aux = p;
          block.stiffness = Vec3(scene_.settings.contact_stiffness, 0, 0);
          contact_blocks_.push_back(block);
        }
      }
    }
  }
  report.timings.narrow_ms += ms_since(narrow_start);
}

void Solver::post_step_scales() {
  for (Rod& rod : scene_.rods) {
    const int n = rod.rest.vertex_count();
    const int m = rod.rest.element_count();
    for (int v = 0; v < n; ++v) {
      if (rod.pinned[v]) continue;
      double ratio = 0.0;
      int count = 0;
      for (int e : {v - 1, v}) {
        if (e < 0 || e >= m) continue;
        const double cur = (rod.state.centers[e + 1] - rod.state.centers[e]).norm();
        ratio += std::sqrt(rod.rest.lengths[e] / std::max(cur, 1e-12));
        ++count;
      }
      rod.state.scales[v] = std::max(rod.rest.scales[v] * ratio / count, kMinScale);
      rod.state.scale_vel[v] = 0.0;
    }
  }
}

void Solver::finalize_velocities(double h) {
  const double keep = 1.0 - scene_.settings.velocity_damping;
  for (int r = 0; r < static_cast<int>(scene_.rods.size()); ++r) {
    Rod& rod = scene_.rods[r];
    const SavedState& prev = prev_[r];
    const int n = rod.rest.vertex_count();
    const int m = rod.rest.element_count();
    for (int v = 0; v < n; ++v) {
      rod.state.center_vel[v] = keep * (rod.state.centers[v] - prev.centers[v]) / h;
      rod.state.scale_vel[v] = keep * (rod.state.scales[v] - prev.scales[v]) / h;
    }
    for (int e = 0; e < m; ++e) {
      const Quat delta = relative_rotation(prev.frames[e], rod.state.frames[e]);
      rod.state.angular_vel[e] = keep * 2.0 * imag(delta) / h;
    }
  }
}

double Solver::end_of_step_penetration() {
  double deepest = 0.0;
  const EvalContext ctx{scene_.rods, &layout_, pills_, scene_.planes, pin_targets_, classic_};
  for (const ConstraintBlock& block : contact_blocks_) {
    const ResidualEval ev = eval_constraint(block, ctx);
    deepest = std::max(deepest, -ev.W[0]);
  }
  return deepest;
}

StepReport Solver::substep(double h, int iterations,
                           std::vector<std::vector<double>>* residual_log) {
  StepReport report;
  report.dof_count = layout_.dof_count;

  const double t_prev = time_;
  const double t_new = time_ + h;
  animate(t_new);

  const auto predict_start = Clock::now();
  prev_.resize(scene_.rods.size());
  for (std::size_t r = 0; r < scene_.rods.size(); ++r) {
    prev_[r].centers = scene_.rods[r].state.centers;
    prev_[r].scales = scene_.rods[r].state.scales;
    prev_[r].frames = scene_.rods[r].state.frames;
  }
  predict_all(h, t_prev, t_new);
  refresh_orientation_inertia(layout_, scene_.rods, scene_.materials);
  report.timings.predict_ms += ms_since(predict_start);

  collide(t_new, report);

  const auto solve_start = Clock::now();
  sweep_blocks_.clear();
  sweep_blocks_.reserve(elastic_.size() + pin_blocks_.size() + contact_blocks_.size());
  sweep_blocks_.insert(sweep_blocks_.end(), elastic_.begin(), elastic_.end());
  sweep_blocks_.insert(sweep_blocks_.end(), pin_blocks_.begin(), pin_blocks_.end());
  sweep_blocks_.insert(sweep_blocks_.end(), contact_blocks_.begin(), contact_blocks_.end());
  for (ConstraintBlock& block : sweep_blocks_) block.lambda = Vec3::Zero();

  const EvalContext ctx{scene_.rods, &layout_, pills_, scene_.planes, pin_targets_, classic_};
  for (int iter = 0; iter < iterations; ++iter) {
    const SweepOutcome outcome =
        jacobi_sweep(sweep_blocks_, scene_.rods, ctx, h, scene_.settings.beta, scratch_);
    report.skipped_singular = outcome.skipped_singular;
    if (!groups_.empty() && (iter + 1) % scene_.settings.shape_match_period == 0) {
      for (BundleGroup& group : groups_) apply_shape_match(group, scene_.rods);
    }
    if (residual_log) {
      residual_log->push_back(elastic_residual_norms(
          std::span<const ConstraintBlock>(sweep_blocks_.data(), elastic_.size()), ctx));
    }
  }
  // Contact multipliers live only within the substep; copy the elastic part
  // back so residual queries outside the sweep see the final lambdas.
  std::copy(sweep_blocks_.begin(), sweep_blocks_.begin() + static_cast<long>(elastic_.size()),
            elastic_.begin());
  contact_blocks_.assign(sweep_blocks_.begin() + static_cast<long>(elastic_.size() + pin_blocks_.size()),
                         sweep_blocks_.end());
  report.timings.solve_ms += ms_since(solve_start);

  const auto finalize_start = Clock::now();
  if (classic_) post_step_scales();
  finalize_velocities(h);
  time_ = t_new;

  report.residuals = elastic_residual_norms(elastic_, ctx);
  report.max_penetration = end_of_step_penetration();
  report.timings.finalize_ms += ms_since(finalize_start);
  return report;
}

StepReport Solver::step() {
  const auto start = Clock::now();
  const int substeps = scene_.settings.substeps;
  const double h = scene_.settings.dt / substeps;

  StepReport total;
  for (int s = 0; s < substeps; ++s) {
    StepReport part = substep(h, scene_.settings.iterations, nullptr);
    total.residuals = std::move(part.residuals);
    total.max_penetration = std::max(total.max_penetration, part.max_penetration);
    total.contact_count += part.contact_count;
    total.broad_pairs += part.broad_pairs;
    total.skipped_singular += part.skipped_singular;
    total.dof_count = part.dof_count;
    total.timings.predict_ms += part.timings.predict_ms;
    total.timings.broad_ms += part.timings.broad_ms;
    total.timings.narrow_ms += part.timings.narrow_ms;
    total.timings.solve_ms += part.timings.solve_ms;
    total.timings.finalize_ms += part.timings.finalize_ms;
  }
  ++step_index_;
  total.step = step_index_;
  total.time = time_;
  total.timings.total_ms = ms_since(start);
  return total;
}

std::vector<std::vector<double>> Solver::probe_convergence(int iterations) {
  require(iterations >= 1, "probe needs at least one iteration");
  std::vector<std::vector<double>> log;
  log.reserve(static_cast<std::size_t>(iterations));
  const double h = scene_.settings.dt / scene_.settings.substeps;
  substep(h, iterations, &log);
  ++step_index_;
  return log;
}

double Solver::kinetic_energy() const {
  double energy = 0.0;
  for (int slot = 0; slot < layout_.total_vertices; ++slot) {
    if (layout_.inv_center[slot] == 0.0) continue;
    const Rod& rod = scene_.rods[layout_.vertex_rod[slot]];
    const int v = layout_.vertex_local[slot];
    energy += 0.5 * layout_.center_weight[slot] * rod.state.center_vel[v].squaredNorm();
    if (layout_.inv_scale[slot] > 0.0) {
      energy += 0.5 * layout_.scale_weight[slot] * rod.state.scale_vel[v] * rod.state.scale_vel[v];
    }
  }
  for (int slot = 0; slot < layout_.total_elements; ++slot) {
    const Rod& rod = scene_.rods[layout_.element_rod[slot]];
    const int e = layout_.element_local[slot];
    const Vec3& w = rod.state.angular_vel[e];
    energy += 0.5 * w.dot(layout_.theta_weight[slot].cwiseProduct(w));
  }
  return energy;
}

double Solver::total_volume() const {
  double volume = 0.0;
  for (const Rod& rod : scene_.rods) volume += current_volume(rod.state, rod.rest);
  return volume;
}

double Solver::total_rest_volume() const {
  double volume = 0.0;
  for (const Rod& rod : scene_.rods) volume += rest_volume(rod.rest);
  return volume;
}

std::vector<Pill> Solver::current_pills() const {
  std::vector<Pill> pills = rod_pills(scene_.rods);
  append_kinematic_pills(time_, pills);
  return pills;
}

std::vector<PillTransform> Solver::pill_transforms() const {
  return rod_pill_transforms(scene_.rods);
}

}  // namespace vrod
