#include "vrod/collision.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace vrod {

double pill_distance_at(const Vec3& x, const Pill& pill, double t) {
  const Vec3 c = (1.0 - t) * pill.c0 + t * pill.c1;
  const double r = (1.0 - t) * pill.r0 + t * pill.r1;
  return (x - c).norm() - r;
}

PillProjection pill_project(const Vec3& x, const Pill& pill) {
  PillProjection out;
  const Vec3 axis = pill.c1 - pill.c0;
  const double l = axis.norm();

  // One end sphere containing the other: the hull is the big sphere, so the
  // better of the two end distances is exact.
  if (l <= std::abs(pill.r0 - pill.r1) || l < 1e-14) {
    const double d0 = (x - pill.c0).norm() - pill.r0;
    const double d1 = (x - pill.c1).norm() - pill.r1;
    out.degenerate = true;
    if (d0 <= d1) {
      out.t = 0.0;
      out.distance = d0;
    } else {
      out.t = 1.0;
      out.distance = d1;
    }
    return out;
  }

  const Vec3 j = axis / l;
  const Vec3 y = x - pill.c0;
  const double a = y.dot(j);                 // axial coordinate of x
  const double b = (y - a * j).norm();       // radial distance from the axis
  // Stationary point of ||x - c(t)|| - r(t): the surface normal tilts by the
  // cone half angle, whose sine is the radius drop per unit length.
  const double sin_theta = (pill.r1 - pill.r0) / l;
  const double tan_theta = sin_theta / std::sqrt(std::max(1e-16, 1.0 - sin_theta * sin_theta));
  double t = (a + b * tan_theta) / l;
  t = std::clamp(t, 0.0, 1.0);
  out.t = t;
  out.distance = pill_distance_at(x, pill, t);
  return out;
}

namespace {

// Signed surface distance between pill a at parameter alpha and pill b,
// minimized over b's parameter by the closed-form projection.
inline double pair_distance(const Pill& a, const Pill& b, double alpha, double& beta_out) {
  const Vec3 ca = (1.0 - alpha) * a.c0 + alpha * a.c1;
  const double ra = (1.0 - alpha) * a.r0 + alpha * a.r1;
  const PillProjection proj = pill_project(ca, b);
  beta_out = proj.t;
  return proj.distance - ra;
}

// Lexicographic order on the raw pill geometry, used to canonicalize the
// search so deepest_penetration(a, b) and (b, a) agree bitwise.
inline bool pill_less(const Pill& a, const Pill& b) {
  for (int i = 0; i < 3; ++i) {
    if (a.c0[i] != b.c0[i]) return a.c0[i] < b.c0[i];
  }
  for (int i = 0; i < 3; ++i) {
    if (a.c1[i] != b.c1[i]) return a.c1[i] < b.c1[i];
  }
  if (a.r0 != b.r0) return a.r0 < b.r0;
  return a.r1 < b.r1;
}

}  // namespace

PillOverlap deepest_penetration(const Pill& a, const Pill& b, int iterations, double warm_alpha) {
  const bool swapped = pill_less(b, a);
  const Pill& pa = swapped ? b : a;
  const Pill& pb = swapped ? a : b;
  if (swapped && warm_alpha >= 0.0) warm_alpha = -1.0;  // warm alpha belongs to `a`

  // The pair objective is jointly convex in (alpha, beta), so its partial
  // minimum over beta is convex in alpha and a bracketing search is exact up
  // to the final interval width.
  double lo = 0.0, hi = 1.0;
  double best_alpha = 0.5, best_beta = 0.0;
  double best = pair_distance(pa, pb, 0.5, best_beta);
  const double delta = 1e-6;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double x1 = mid - delta;
    const double x2 = mid + delta;
    double b1 = 0.0, b2 = 0.0;
    const double f1 = pair_distance(pa, pb, x1, b1);
    const double f2 = pair_distance(pa, pb, x2, b2);
    if (f1 < best) {
      best = f1;
      best_alpha = x1;
      best_beta = b1;
    }
    if (f2 < best) {
      best = f2;
      best_alpha = x2;
      best_beta = b2;
    }
    if (f1 <= f2) {
      hi = x2;
    } else {
      lo = x1;
    }
  }
  for (double cand : {lo, hi, warm_alpha}) {
    if (cand < 0.0 || cand > 1.0) continue;
    double bc = 0.0;
    const double fc = pair_distance(pa, pb, cand, bc);
    if (fc < best) {
      best = fc;
      best_alpha = cand;
      best_beta = bc;
    }
  }

  PillOverlap out;
  out.distance = best;
  if (swapped) {
    out.alpha = best_beta;
    out.beta = best_alpha;
  } else {
    out.alpha = best_alpha;
    out.beta = best_beta;
  }
  return out;
}

void bounding_sphere(const Pill& pill, Vec3& center, double& radius) {
  const Vec3 axis = pill.c1 - pill.c0;
  const double l = axis.norm();
  if (l + pill.r1 <= pill.r0) {  // sphere 0 covers everything
    center = pill.c0;
    radius = pill.r0;
    return;
  }
  if (l + pill.r0 <= pill.r1) {
    center = pill.c1;
    radius = pill.r1;
    return;
  }
  const double u = 0.5 * (l + pill.r1 - pill.r0);
  center = pill.c0 + axis * (u / l);
  radius = 0.5 * (l + pill.r0 + pill.r1);
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    // Large-prime mix, the usual spatial hashing recipe.
    const std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ull ^
                            static_cast<std::uint64_t>(k.y) * 19349663ull ^
                            static_cast<std::uint64_t>(k.z) * 83492791ull;
    return static_cast<std::size_t>(h);
  }
};

inline bool pair_allowed(const Pill& a, const Pill& b) {
  if (a.rod < 0 && b.rod < 0) return false;  // two kinematic pills
  if (a.group >= 0 && a.group == b.group) return false;
  if (a.rod >= 0 && a.rod == b.rod) {
    if (!a.self_collide) return false;
    if (std::abs(a.element - b.element) <= 1) return false;  // share a vertex
  }
  return true;
}

}  // namespace

std::vector<std::pair<int, int>> broad_phase(std::span<const Pill> pills) {
  const int n = static_cast<int>(pills.size());
  std::vector<std::pair<int, int>> pairs;
  if (n < 2) return pairs;

  std::vector<Vec3> centers(n);
  std::vector<double> radii(n);
  double max_radius = 0.0;
  for (int i = 0; i < n; ++i) {
    bounding_sphere(pills[i], centers[i], radii[i]);
    require(centers[i].allFinite() && std::isfinite(radii[i]), "broad_phase: non-finite pill");
    max_radius = std::max(max_radius, radii[i]);
  }
  const double cell = std::max(2.0 * max_radius, 1e-12);
  const double inv_cell = 1.0 / cell;

  auto key_of = [&](const Vec3& p) {
    return CellKey{static_cast<std::int64_t>(std::floor(p.x() * inv_cell)),
                   static_cast<std::int64_t>(std::floor(p.y() * inv_cell)),
                   static_cast<std::int64_t>(std::floor(p.z() * inv_cell))};
  };

  std::unordered_map<CellKey, std::vector<int>, CellHash> grid;
  grid.reserve(static_cast<std::size_t>(n) * 2);
  for (int i = 0; i < n; ++i) grid[key_of(centers[i])].push_back(i);

  // Count candidates per pill, then prefix-sum and fill. Keeps the pair list
  // in deterministic (i, j) order regardless of hash iteration order.
  std::vector<int> counts(n + 1, 0);
  auto visit_neighbors = [&](int i, auto&& fn) {
    const CellKey base = key_of(centers[i]);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find(CellKey{base.x + dx, base.y + dy, base.z + dz});
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (j <= i) continue;
            if (!pair_allowed(pills[i], pills[j])) continue;
            fn(j);
          }
        }
  };
  for (int i = 0; i < n; ++i) visit_neighbors(i, [&](int) { ++counts[i + 1]; });
  for (int i = 0; i < n; ++i) counts[i + 1] += counts[i];

  pairs.resize(counts[n]);
  for (int i = 0; i < n; ++i) {
    int cursor = counts[i];
    visit_neighbors(i, [&](int j) { pairs[cursor++] = {i, j}; });
    std::sort(pairs.begin() + counts[i], pairs.begin() + counts[i + 1],
              [](const auto& p, const auto& q) { return p.second < q.second; });
  }
  return pairs;
}

std::uint64_t pair_key(const Pill& a, const Pill& b) {
  auto id = [](const Pill& p) {
    const std::uint32_t rod = static_cast<std::uint32_t>(p.rod + 1);
    const std::uint32_t el = static_cast<std::uint32_t>(p.element + 1);
    return (rod << 16) | (el & 0xffffu);
  };
  std::uint32_t ia = id(a), ib = id(b);
  if (ia > ib) std::swap(ia, ib);
  return (static_cast<std::uint64_t>(ia) << 32) | ib;
}

std::vector<ContactData> find_contacts(std::span<const Pill> pills,
                                       std::span<const std::pair<int, int>> pairs,
                                       int dichotomous_iterations,
                                       const std::vector<std::pair<std::uint64_t, double>>* warm) {
  std::unordered_map<std::uint64_t, double> warm_map;
  if (warm) {
    warm_map.reserve(warm->size());
    for (const auto& [k, v] : *warm) warm_map.emplace(k, v);
  }
  std::vector<ContactData> contacts;
  for (const auto& [i, j] : pairs) {
    double warm_alpha = -1.0;
    if (warm) {
      const auto it = warm_map.find(pair_key(pills[i], pills[j]));
      if (it != warm_map.end()) warm_alpha = it->second;
    }
    const PillOverlap overlap = deepest_penetration(pills[i], pills[j], dichotomous_iterations, warm_alpha);
    if (overlap.distance < 0.0) {
      contacts.push_back({i, j, overlap.alpha, overlap.beta, overlap.distance});
    }
  }
  return contacts;
}

std::vector<Pill> rod_pills(std::span<const Rod> rods) {
  std::vector<Pill> pills;
  std::size_t total = 0;
  for (const Rod& rod : rods) total += static_cast<std::size_t>(rod.rest.element_count());
  pills.reserve(total);
  for (int r = 0; r < static_cast<int>(rods.size()); ++r) {
    const Rod& rod = rods[r];
    for (int e = 0; e < rod.rest.element_count(); ++e) {
      Pill p;
      p.c0 = rod.state.centers[e];
      p.c1 = rod.state.centers[e + 1];
      p.r0 = rod.state.scales[e] * rod.rest.radii[e];
      p.r1 = rod.state.scales[e + 1] * rod.rest.radii[e + 1];
      p.rod = r;
      p.element = e;
      p.group = rod.collision_group;
      p.self_collide = rod.self_collide;
      pills.push_back(p);
    }
  }
  return pills;
}

}  // namespace vrod
