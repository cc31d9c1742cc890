#pragma once

#include <array>
#include <span>
#include <vector>

#include "vrod/collision.h"
#include "vrod/rod.h"

namespace vrod {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Similarity transform carried by one pill for skinning: element midpoint
/// center, midpoint scale and the element frame.
struct PillTransform {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;
  Quat rotation = Quat::Identity();
};

/// Pill transforms in rod-major, element-major order (matching rod_pills).
std::vector<PillTransform> rod_pill_transforms(std::span<const Rod> rods);
std::vector<PillTransform> rod_rest_pill_transforms(std::span<const Rod> rods);

/// Pills built from the rest pose (rest centers, rest scales x radii), for
/// distance queries at bind time.
std::vector<Pill> rod_rest_pills(std::span<const Rod> rods);

/// Sparse pill weights per mesh vertex (CSR layout) plus the cached rest
/// transforms the deformation is relative to.
struct SkinBinding {
  std::vector<int> offsets;   // vertex_count + 1
  std::vector<int> pills;     // influence pill index
  std::vector<double> weights;
  std::vector<PillTransform> rest;  // per pill, full pill array
  int max_influences = 8;
  int clamped_vertices = 0;  // vertices inside a pill (distance clamped)
};

/// Inverse-square surface-distance weights, truncated to the top
/// `max_influences` pills per vertex and renormalized. Distances below
/// `epsilon` (including negative = inside) clamp to epsilon.
SkinBinding bind_skin(const TriMesh& mesh, std::span<const Pill> rest_pills,
                      std::span<const PillTransform> rest_transforms, int max_influences = 8,
                      double epsilon = 1e-4);

/// Optional weight fairing: each iteration averages every vertex's weight
/// vector with its one-ring neighbours' (factor 0.5), then truncates and
/// renormalizes again.
void smooth_binding(SkinBinding& binding, const TriMesh& mesh, int iterations);

/// Linear blend skinning of the rest mesh by the pills' rest-to-current
/// relative similarity transforms. `out` is resized to the vertex count.
void deform_mesh(const SkinBinding& binding, std::span<const PillTransform> current,
                 const TriMesh& rest_mesh, std::vector<Vec3>& out);

}  // namespace vrod
