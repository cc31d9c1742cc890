#include "vrod/skinning.h"

#include <algorithm>
#include <cmath>
#include <map>

namespace vrod {

std::vector<PillTransform> rod_pill_transforms(std::span<const Rod> rods) {
  std::vector<PillTransform> out;
  for (const Rod& rod : rods) {
    const int m = rod.rest.element_count();
    for (int e = 0; e < m; ++e) {
      PillTransform t;
      t.center = 0.5 * (rod.state.centers[e] + rod.state.centers[e + 1]);
      t.scale = 0.5 * (rod.state.scales[e] + rod.state.scales[e + 1]);
      t.rotation = rod.state.frames[e];
      out.push_back(t);
    }
  }
  return out;
}

std::vector<PillTransform> rod_rest_pill_transforms(std::span<const Rod> rods) {
  std::vector<PillTransform> out;
  for (const Rod& rod : rods) {
    const int m = rod.rest.element_count();
    for (int e = 0; e < m; ++e) {
      PillTransform t;
      t.center = 0.5 * (rod.rest.centers[e] + rod.rest.centers[e + 1]);
      t.scale = 0.5 * (rod.rest.scales[e] + rod.rest.scales[e + 1]);
      t.rotation = rod.rest.frames[e];
      out.push_back(t);
    }
  }
  return out;
}

std::vector<Pill> rod_rest_pills(std::span<const Rod> rods) {
  std::vector<Pill> out;
  for (int r = 0; r < static_cast<int>(rods.size()); ++r) {
    const Rod& rod = rods[r];
    const int m = rod.rest.element_count();
    for (int e = 0; e < m; ++e) {
      Pill p;
      p.c0 = rod.rest.centers[e];
      p.c1 = rod.rest.centers[e + 1];
      p.r0 = rod.rest.scales[e] * rod.rest.radii[e];
      p.r1 = rod.rest.scales[e + 1] * rod.rest.radii[e + 1];
      p.rod = r;
      p.element = e;
      out.push_back(p);
    }
  }
  return out;
}

SkinBinding bind_skin(const TriMesh& mesh, std::span<const Pill> rest_pills,
                      std::span<const PillTransform> rest_transforms, int max_influences,
                      double epsilon) {
  require(!rest_pills.empty(), "skin binding needs at least one pill");
  require(rest_pills.size() == rest_transforms.size(),
          "pill list and transform list must match");
  require(max_influences >= 1, "max_influences must be at least 1");
  require(epsilon > 0.0, "epsilon must be positive");

  SkinBinding binding;
  binding.max_influences = max_influences;
  binding.rest.assign(rest_transforms.begin(), rest_transforms.end());

  const int vertex_count = static_cast<int>(mesh.vertices.size());
  const int pill_count = static_cast<int>(rest_pills.size());
  binding.offsets.assign(static_cast<std::size_t>(vertex_count) + 1, 0);

  std::vector<std::pair<double, int>> scored(static_cast<std::size_t>(pill_count));
  for (int v = 0; v < vertex_count; ++v) {
    bool clamped = false;
    for (int p = 0; p < pill_count; ++p) {
      const double d = pill_project(mesh.vertices[v], rest_pills[p]).distance;
      if (d < epsilon) clamped = clamped || d < 0.0;
      const double dc = std::max(d, epsilon);
      scored[p] = {1.0 / (dc * dc), p};
    }
    if (clamped) ++binding.clamped_vertices;
    const int keep = std::min(max_influences, pill_count);
    std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                      [](const auto& a, const auto& b) {
                        return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    double total = 0.0;
    for (int k = 0; k < keep; ++k) total += scored[k].first;
    // Keep the influence list sorted by pill index for reproducible output.
    std::sort(scored.begin(), scored.begin() + keep,
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (int k = 0; k < keep; ++k) {
      binding.pills.push_back(scored[k].second);
      binding.weights.push_back(scored[k].first / total);
    }
    binding.offsets[v + 1] = static_cast<int>(binding.pills.size());
  }
  return binding;
}

void smooth_binding(SkinBinding& binding, const TriMesh& mesh, int iterations) {
  if (iterations <= 0) return;
  const int vertex_count = static_cast<int>(mesh.vertices.size());
  std::vector<std::vector<int>> neighbours(vertex_count);
  for (const auto& tri : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      neighbours[a].push_back(b);
      neighbours[b].push_back(a);
    }
  }
  for (auto& list : neighbours) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  for (int iter = 0; iter < iterations; ++iter) {
    std::vector<int> new_offsets{0};
    std::vector<int> new_pills;
    std::vector<double> new_weights;
    for (int v = 0; v < vertex_count; ++v) {
      std::map<int, double> blended;
      for (int k = binding.offsets[v]; k < binding.offsets[v + 1]; ++k) {
        blended[binding.pills[k]] += 0.5 * binding.weights[k];
      }
      if (!neighbours[v].empty()) {
        const double share = 0.5 / neighbours[v].size();
        for (int nb : neighbours[v]) {
          for (int k = binding.offsets[nb]; k < binding.offsets[nb + 1]; ++k) {
            blended[binding.pills[k]] += share * binding.weights[k];
          }
        }
      } else {
        for (int k = binding.offsets[v]; k < binding.offsets[v + 1]; ++k) {
          blended[binding.pills[k]] += 0.5 * binding.weights[k];
        }
      }
      std::vector<std::pair<double, int>> scored;
      scored.reserve(blended.size());
      for (const auto& [pill, w] : blended) scored.push_back({w, pill});
      const int keep = std::min<int>(binding.max_influences, static_cast<int>(scored.size()));
      std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                        [](const auto& a, const auto& b) {
                          return a.first != b.first ? a.first > b.first : a.second < b.second;
                        });
      double total = 0.0;
      for (int k = 0; k < keep; ++k) total += scored[k].first;
      std::sort(scored.begin(), scored.begin() + keep,
                [](const auto& a, const auto& b) { return a.second < b.second; });
      for (int k = 0; k < keep; ++k) {
        new_pills.push_back(scored[k].second);
        new_weights.push_back(scored[k].first / total);
      }
      new_offsets.push_back(static_cast<int>(new_pills.size()));
    }
    binding.offsets = std::move(new_offsets);
    binding.pills = std::move(new_pills);
    binding.weights = std::move(new_weights);
  }
}

void deform_mesh(const SkinBinding& binding, std::span<const PillTransform> current,
                 const TriMesh& rest_mesh, std::vector<Vec3>& out) {
  require(current.size() == binding.rest.size(), "transform count changed since binding");
  const int vertex_count = static_cast<int>(rest_mesh.vertices.size());
  require(static_cast<int>(binding.offsets.size()) == vertex_count + 1,
          "binding does not match mesh");
  out.assign(static_cast<std::size_t>(vertex_count), Vec3::Zero());
  for (int v = 0; v < vertex_count; ++v) {
    const Vec3& rest = rest_mesh.vertices[v];
    Vec3 blended = Vec3::Zero();
    for (int k = binding.offsets[v]; k < binding.offsets[v + 1]; ++k) {
      const PillTransform& cur = current[binding.pills[k]];
      const PillTransform& ref = binding.rest[binding.pills[k]];
      const Vec3 local = ref.rotation.conjugate() * (rest - ref.center);
      blended += binding.weights[k] *
                 (cur.center + (cur.scale / ref.scale) * (cur.rotation * local));
    }
    out[v] = blended;
  }
  return;
}

}  // namespace vrod
