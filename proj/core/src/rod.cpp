#include "vrod/rod.h"

#include <algorithm>
#include <cmath>

namespace vrod {

void MaterialParams::validate() const {
  require(stretch_x >= 0 && stretch_y >= 0 && stretch_z >= 0, "material: stretch stiffness must be >= 0");
  require(bend_x >= 0 && bend_y >= 0 && bend_z >= 0, "material: bend stiffness must be >= 0");
  require(volume >= 0, "material: volume stiffness must be >= 0");
  require(density > 0, "material: density must be > 0");
}

void RodRestPose::validate() const {
  const int n = vertex_count();
  const int m = element_count();
  require(n >= 2, "rest pose: need at least 2 vertices");
  require(m == n - 1, "rest pose: frame count must be vertex count - 1");
  require(scales.size() == centers.size(), "rest pose: scales size mismatch");
  require(radii.size() == centers.size(), "rest pose: radii size mismatch");
  require(static_cast<int>(lengths.size()) == m, "rest pose: lengths size mismatch");
  require(static_cast<int>(initial_lengths.size()) == m, "rest pose: initial lengths size mismatch");
  require(static_cast<int>(tangent_dots.size()) == m, "rest pose: tangent dots size mismatch");
  require(static_cast<int>(scale_grads.size()) == m, "rest pose: scale grads size mismatch");
  require(static_cast<int>(darboux.size()) == std::max(0, m - 1), "rest pose: darboux size mismatch");
  require(static_cast<int>(scale_laplacians.size()) == std::max(0, m - 1),
          "rest pose: scale laplacians size mismatch");
  for (double l : lengths) require(l > 0, "rest pose: element length must be > 0");
  for (double l : initial_lengths) require(l > 0, "rest pose: element length must be > 0");
  for (double r : radii) require(r > 0, "rest pose: radius must be > 0");
  for (double s : scales) require(s > 0, "rest pose: scale must be > 0");
  for (const Quat& q : frames) require(is_unit(q), "rest pose: frame quaternion not unit");
}

namespace {

// Refreshes the rest quantities that depend on the strain lengths. The
// tangent alignment is deliberately not part of this: it measures the
// as-built frame/centerline agreement and must stay put when activation
// rescales lengths, otherwise the stretch target would not shorten.
void refresh_length_derived(RodRestPose& rest) {
  const int m = rest.element_count();
  rest.scale_grads.resize(m);
  for (int e = 0; e < m; ++e) {
    rest.scale_grads[e] = (rest.scales[e + 1] - rest.scales[e]) / rest.lengths[e];
  }
  rest.darboux.resize(std::max(0, m - 1));
  rest.scale_laplacians.resize(std::max(0, m - 1));
  for (int j = 1; j < m; ++j) {
    rest.darboux[j - 1] = darboux_vector(rest.frames[j - 1], rest.frames[j],
                                         rest.lengths[j - 1], rest.lengths[j]);
    rest.scale_laplacians[j - 1] = (rest.scales[j + 1] - rest.scales[j]) / rest.lengths[j] -
                                   (rest.scales[j] - rest.scales[j - 1]) / rest.lengths[j - 1];
  }
}

}  // namespace

RodRestPose make_rest_pose(std::span<const Vec3> centers,
                           std::span<const double> radii,
                           std::span<const double> scales) {
  const int n = static_cast<int>(centers.size());
  require(n >= 2, "make_rest_pose: need at least 2 vertices");
  const int m = n - 1;

  RodRestPose rest;
  rest.centers.assign(centers.begin(), centers.end());

  if (radii.size() == 1) {
    rest.radii.assign(n, radii[0]);
  } else {
    require(static_cast<int>(radii.size()) == n, "make_rest_pose: radii must be uniform or per vertex");
    rest.radii.assign(radii.begin(), radii.end());
  }
  if (scales.empty()) {
    rest.scales.assign(n, 1.0);
  } else if (scales.size() == 1) {
    rest.scales.assign(n, scales[0]);
  } else {
    require(static_cast<int>(scales.size()) == n, "make_rest_pose: scales must be uniform or per vertex");
    rest.scales.assign(scales.begin(), scales.end());
  }

  rest.lengths.resize(m);
  std::vector<Vec3> tangents(m);
  for (int e = 0; e < m; ++e) {
    const Vec3 d = rest.centers[e + 1] - rest.centers[e];
    rest.lengths[e] = d.norm();
    require(rest.lengths[e] > 0, "make_rest_pose: coincident consecutive centers");
    tangents[e] = d / rest.lengths[e];
  }
  rest.initial_lengths = rest.lengths;

  // Parallel transport a frame whose third column tracks the tangent.
  rest.frames.resize(m);
  rest.frames[0] = minimal_rotation(Vec3::UnitZ(), tangents[0]);
  for (int e = 1; e < m; ++e) {
    const Quat dq = minimal_rotation(tangents[e - 1], tangents[e]);
    rest.frames[e] = (dq * rest.frames[e - 1]).normalized();
    if (rest.frames[e].dot(rest.frames[e - 1]) < 0) rest.frames[e].coeffs() *= -1.0;
  }

  rest.tangent_dots.resize(m);
  for (int e = 0; e < m; ++e) {
    const Vec3 w = rest.frames[e].toRotationMatrix().col(2);
    rest.tangent_dots[e] = w.dot(tangents[e]);
  }
  refresh_length_derived(rest);
  rest.validate();
  return rest;
}

RodState make_rest_state(const RodRestPose& rest) {
  RodState st;
  st.centers = rest.centers;
  st.scales = rest.scales;
  st.frames = rest.frames;
  st.center_vel.assign(rest.centers.size(), Vec3::Zero());
  st.scale_vel.assign(rest.centers.size(), 0.0);
  st.angular_vel.assign(rest.frames.size(), Vec3::Zero());
  return st;
}

MidpointState midpoint_state(const RodState& state, const RodRestPose& rest, int element) {
  require_index(element >= 0 && element < state.element_count(), "midpoint_state: element out of range");
  MidpointState mid;
  mid.center = 0.5 * (state.centers[element] + state.centers[element + 1]);
  mid.scale = 0.5 * (state.scales[element] + state.scales[element + 1]);
  mid.radius = 0.5 * (rest.radii[element] + rest.radii[element + 1]);
  mid.frame = state.frames[element];
  return mid;
}

Vec3 center_gradient(const RodState& state, const RodRestPose& rest, int element) {
  require_index(element >= 0 && element < state.element_count(), "center_gradient: element out of range");
  return (state.centers[element + 1] - state.centers[element]) / rest.lengths[element];
}

double scale_gradient(const RodState& state, const RodRestPose& rest, int element) {
  require_index(element >= 0 && element < state.element_count(), "scale_gradient: element out of range");
  return (state.scales[element + 1] - state.scales[element]) / rest.lengths[element];
}

double scale_laplacian(const RodState& state, const RodRestPose& rest, int vertex) {
  require_index(vertex >= 1 && vertex < state.element_count(), "scale_laplacian: interior vertex required");
  return (state.scales[vertex + 1] - state.scales[vertex]) / rest.lengths[vertex] -
         (state.scales[vertex] - state.scales[vertex - 1]) / rest.lengths[vertex - 1];
}

Quat relative_rotation(const Quat& qa, const Quat& qb) {
  Quat p = qa.conjugate() * qb;
  if (p.w() < 0) p.coeffs() *= -1.0;  // pick the hemisphere with non-negative dot
  return p;
}

Vec3 darboux_vector(const Quat& qa, const Quat& qb, double la, double lb) {
  require(is_unit(qa) && is_unit(qb), "darboux_vector: quaternions must be unit norm");
  require(la > 0 && lb > 0, "darboux_vector: lengths must be > 0");
  const Quat p = relative_rotation(qa, qb);
  return 4.0 / (la + lb) * imag(p);
}

void apply_activation(RodRestPose& rest, double a, double factor,
                      int first_element, int last_element) {
  const int m = rest.element_count();
  if (last_element < 0) last_element = m - 1;
  require_index(first_element >= 0 && last_element < m && first_element <= last_element,
                "apply_activation: element range out of bounds");
  const double scale = 1.0 - a * factor;
  require(scale > 0, "apply_activation: activation would collapse rest lengths");
  for (int e = first_element; e <= last_element; ++e) {
    rest.lengths[e] = rest.initial_lengths[e] * scale;
  }
  refresh_length_derived(rest);
}

double current_volume(const RodState& state, const RodRestPose& rest) {
  double v = 0.0;
  for (int e = 0; e < state.element_count(); ++e) {
    const double s = 0.5 * (state.scales[e] + state.scales[e + 1]);
    const double r = 0.5 * (rest.radii[e] + rest.radii[e + 1]);
    const double len = (state.centers[e + 1] - state.centers[e]).norm();
    v += kPi * (s * r) * (s * r) * len;
  }
  return v;
}

double rest_volume(const RodRestPose& rest) {
  double v = 0.0;
  for (int e = 0; e < rest.element_count(); ++e) {
    const double s = 0.5 * (rest.scales[e] + rest.scales[e + 1]);
    const double r = 0.5 * (rest.radii[e] + rest.radii[e + 1]);
    v += kPi * (s * r) * (s * r) * rest.initial_lengths[e];
  }
  return v;
}

}  // namespace vrod
