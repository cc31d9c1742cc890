#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vrod/types.h"

namespace vrod {

/// Material of one rod. Stiffnesses are moduli (force/area); density is
/// mass/volume. The x/y pairs act on the cross section, z along the axis.
struct MaterialParams {
  double stretch_x = 1e4;   // cross-section resistance, x
  double stretch_y = 1e4;   // cross-section resistance, y
  double stretch_z = 1e4;   // axial stretch resistance
  double bend_x = 1e3;      // surface bending resistance, x
  double bend_y = 1e3;      // surface bending resistance, y
  double bend_z = 0.0;      // reserved; the discrete energy has no z bending term
  double volume = 1e6;      // volume preservation strength
  double density = 1000.0;  // mass density

  void validate() const;
};

/// Immutable reference configuration of one rod with m elements and m+1
/// vertices. Centers, scales and radii live on vertices; frames live on
/// element midpoints. `lengths` are the strain rest lengths (activation can
/// shorten them); `initial_lengths` stay fixed and anchor the volume terms.
struct RodRestPose {
  std::vector<Vec3> centers;           // m+1
  std::vector<double> scales;          // m+1
  std::vector<double> radii;           // m+1
  std::vector<double> lengths;         // m, strain target lengths
  std::vector<double> initial_lengths; // m, as-built lengths (volume anchor)
  std::vector<Quat> frames;            // m, unit quaternions at midpoints
  std::vector<Vec3> darboux;           // m-1, at interior vertices (index j-1)
  std::vector<double> tangent_dots;    // m, rest tangent alignment w^T dz c
  std::vector<double> scale_grads;     // m, rest scale first differences
  std::vector<double> scale_laplacians;// m-1, rest second differences

  int vertex_count() const { return static_cast<int>(centers.size()); }
  int element_count() const { return static_cast<int>(frames.size()); }

  void validate() const;
};

/// Dynamic state of one rod: the DOFs plus their velocities. Angular
/// velocities are body-frame vectors per element.
struct RodState {
  std::vector<Vec3> centers;       // m+1
  std::vector<double> scales;      // m+1
  std::vector<Quat> frames;        // m
  std::vector<Vec3> center_vel;    // m+1
  std::vector<double> scale_vel;   // m+1
  std::vector<Vec3> angular_vel;   // m, body frame

  int vertex_count() const { return static_cast<int>(centers.size()); }
  int element_count() const { return static_cast<int>(frames.size()); }
};

/// One simulated rod: reference pose, live state, material and collision
/// policy. `pinned[v]` makes vertex v kinematic (center and scale).
struct Rod {
  RodRestPose rest;
  RodState state;
  int material = 0;
  std::vector<std::uint8_t> pinned;  // m+1, 0/1
  int collision_group = -1;          // >=0: pills of equal group never collide
  bool self_collide = false;         // allow non-adjacent self contacts
  // Optional two-bone rig for kinematic warm starting (empty when unused).
  std::vector<int> bones;
  std::vector<std::vector<double>> bone_weights;  // per vertex, matches `bones`
};

/// Interpolated quantities at the midpoint of element e: center, scale,
/// radius and the element frame.
struct MidpointState {
  Vec3 center;
  double scale;
  double radius;
  Quat frame;
};

/// Build a reference pose from a centerline polyline. Frames are parallel
/// transported so the frame's third column follows the tangent. Radii and
/// scales may be uniform (size 1) or per vertex.
RodRestPose make_rest_pose(std::span<const Vec3> centers,
                           std::span<const double> radii,
                           std::span<const double> scales = {});

/// State equal to the reference pose, at rest.
RodState make_rest_state(const RodRestPose& rest);

MidpointState midpoint_state(const RodState& state, const RodRestPose& rest, int element);

/// First difference of vertex centers over element e: (c[e+1]-c[e])/l[e].
Vec3 center_gradient(const RodState& state, const RodRestPose& rest, int element);

/// First difference of vertex scales over element e: (s[e+1]-s[e])/l[e].
double scale_gradient(const RodState& state, const RodRestPose& rest, int element);

/// Second difference of scales at interior vertex j:
/// (s[j+1]-s[j])/l[j] - (s[j]-s[j-1])/l[j-1].
double scale_laplacian(const RodState& state, const RodRestPose& rest, int vertex);

/// Discrete Darboux vector at the vertex between two element frames:
/// 4/(la+lb) * Im(conj(qa)*qb), with qb flipped into qa's hemisphere first.
/// Throws if either quaternion deviates from unit norm by more than 1e-6.
Vec3 darboux_vector(const Quat& qa, const Quat& qb, double la, double lb);

/// Hemisphere-canonicalized relative quaternion conj(qa)*qb (w >= 0).
Quat relative_rotation(const Quat& qa, const Quat& qb);

/// Scale the strain rest lengths of elements [first, last] by (1 - a*factor)
/// and refresh the dependent rest quantities. Volume anchors are untouched,
/// so a shortened rod bulges to keep its as-built volume. Throws if the
/// scaling is not positive. `last < 0` means the end of the rod.
void apply_activation(RodRestPose& rest, double a, double factor,
                      int first_element = 0, int last_element = -1);

/// Sum of pi*(s*r)^2*l over elements, with s, r averaged per element and l
/// the current center distances.
double current_volume(const RodState& state, const RodRestPose& rest);

/// Same measure evaluated on the reference pose with as-built lengths.
double rest_volume(const RodRestPose& rest);

}  // namespace vrod
