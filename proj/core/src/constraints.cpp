#include "vrod/constraints.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vrod/parallel.h"

namespace vrod {

const char* kind_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kStretchZ: return "stretch_z";
    case ConstraintKind::kCrossSection: return "cross_section";
    case ConstraintKind::kSurfaceStretch: return "surface_stretch";
    case ConstraintKind::kBendTwist: return "bend_twist";
    case ConstraintKind::kSurfaceBending: return "surface_bending";
    case ConstraintKind::kVolumeStretch: return "volume_stretch";
    case ConstraintKind::kVolumeBendU: return "volume_bend_u";
    case ConstraintKind::kVolumeBendV: return "volume_bend_v";
    case ConstraintKind::kContact: return "contact";
    case ConstraintKind::kHalfPlane: return "half_plane";
    case ConstraintKind::kPin: return "pin";
  }
  return "unknown";
}

int residual_dim(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::kStretchZ:
    case ConstraintKind::kBendTwist:
    case ConstraintKind::kVolumeStretch:
    case ConstraintKind::kPin:
      return 3;
    default:
      return 1;
  }
}

namespace {

// d(R * exp([theta]x) * e_z)/dtheta at theta = 0.
inline Mat3 axis_column_derivative(const Mat3& R) {
  return -R * cross_matrix(Vec3::UnitZ());
}

// Derivatives of the relative-rotation imaginary part w.r.t. body-frame
// increments on the two frames, with p the hemisphere-canonical relative
// quaternion. For qa: -0.5*(p.w*I - [p_v]x); for qb the p.w term flips sign.
inline Mat3 dimag_dqa(const Quat& p) { return 0.5 * (-p.w() * Mat3::Identity() + cross_matrix(imag(p))); }
inline Mat3 dimag_dqb(const Quat& p) { return 0.5 * (p.w() * Mat3::Identity() + cross_matrix(imag(p))); }

inline void push_center(ResidualEval& ev, int slot, const Mat3& jac) {
  ev.center_slot[ev.n_centers] = slot;
  ev.center_jac[ev.n_centers] = jac;
  ++ev.n_centers;
}
inline void push_scale(ResidualEval& ev, int slot, const Vec3& jac) {
  ev.scale_slot[ev.n_scales] = slot;
  ev.scale_jac[ev.n_scales] = jac;
  ++ev.n_scales;
}
inline void push_theta(ResidualEval& ev, int slot, const Mat3& jac) {
  ev.theta_slot[ev.n_thetas] = slot;
  ev.theta_jac[ev.n_thetas] = jac;
  ++ev.n_thetas;
}

struct PillGeometry {
  Vec3 c0, c1;
  double r0, r1;       // world radii
  double rbar0, rbar1; // rest radii (zero for kinematic pills)
  int v0 = -1, v1 = -1;  // global vertex slots, -1 when kinematic
};

PillGeometry resolve_pill(int pill_index, const EvalContext& ctx) {
  const Pill& p = ctx.pills[pill_index];
  PillGeometry g;
  if (p.rod >= 0) {
    const Rod& rod = ctx.rods[p.rod];
    g.c0 = rod.state.centers[p.element];
    g.c1 = rod.state.centers[p.element + 1];
    g.rbar0 = rod.rest.radii[p.element];
    g.rbar1 = rod.rest.radii[p.element + 1];
    g.r0 = rod.state.scales[p.element] * g.rbar0;
    g.r1 = rod.state.scales[p.element + 1] * g.rbar1;
    g.v0 = ctx.layout->vertex_slot(p.rod, p.element);
    g.v1 = ctx.layout->vertex_slot(p.rod, p.element + 1);
  } else {
    g.c0 = p.c0;
    g.c1 = p.c1;
    g.r0 = p.r0;
    g.r1 = p.r1;
    g.rbar0 = g.rbar1 = 0.0;
  }
  return g;
}

}  // namespace

ResidualEval eval_constraint(const ConstraintBlock& block, const EvalContext& ctx) {
  ResidualEval ev;
  ev.dim = residual_dim(block.kind);

  switch (block.kind) {
    case ConstraintKind::kStretchZ: {
      const Rod& rod = ctx.rods[block.rod];
      const int e = block.loc;
      const double l = rod.rest.lengths[e];
      const Mat3 R = rod.state.frames[e].toRotationMatrix();
      const Vec3 w = R.col(2);
      const double tbar = rod.rest.tangent_dots[e];
      const Vec3 dzc = (rod.state.centers[e + 1] - rod.state.centers[e]) / l;
      ev.W = dzc - w * tbar;
      push_center(ev, ctx.layout->vertex_slot(block.rod, e), Mat3::Identity() * (-1.0 / l));
      push_center(ev, ctx.layout->vertex_slot(block.rod, e + 1), Mat3::Identity() * (1.0 / l));
      push_theta(ev, ctx.layout->element_slot(block.rod, e), -tbar * axis_column_derivative(R));
      break;
    }
    case ConstraintKind::kCrossSection: {
      const Rod& rod = ctx.rods[block.rod];
      const int e = block.loc;
      const double smid = 0.5 * (rod.state.scales[e] + rod.state.scales[e + 1]);
      const double smid_rest = 0.5 * (rod.rest.scales[e] + rod.rest.scales[e + 1]);
      ev.W[0] = smid - smid_rest;
      push_scale(ev, ctx.layout->vertex_slot(block.rod, e), Vec3(0.5, 0, 0));
      push_scale(ev, ctx.layout->vertex_slot(block.rod, e + 1), Vec3(0.5, 0, 0));
      break;
    }
    case ConstraintKind::kSurfaceStretch: {
      const Rod& rod = ctx.rods[block.rod];
      const int e = block.loc;
      const double l = rod.rest.lengths[e];
      ev.W[0] = (rod.state.scales[e + 1] - rod.state.scales[e]) / l - rod.rest.scale_grads[e];
      push_scale(ev, ctx.layout->vertex_slot(block.rod, e), Vec3(-1.0 / l, 0, 0));
      push_scale(ev, ctx.layout->vertex_slot(block.rod, e + 1), Vec3(1.0 / l, 0, 0));
      break;
    }
    case ConstraintKind::kBendTwist: {
      const Rod& rod = ctx.rods[block.rod];
      const int j = block.loc;
      const double la = rod.rest.lengths[j - 1];
      const double lb = rod.rest.lengths[j];
      const Quat p = relative_rotation(rod.state.frames[j - 1], rod.state.frames[j]);
      const double inv_len = 4.0 / (la + lb);
      const Vec3 omega = inv_len * imag(p);
      const double s = ctx.classic_scales ? rod.rest.scales[j] : rod.state.scales[j];
      ev.W = s * omega - rod.rest.scales[j] * rod.rest.darboux[j - 1];
      if (!ctx.classic_scales) {
        push_scale(ev, ctx.layout->vertex_slot(block.rod, j), omega);
      }
      push_theta(ev, ctx.layout->element_slot(block.rod, j - 1), s * inv_len * dimag_dqa(p));
      push_theta(ev, ctx.layout->element_slot(block.rod, j), s * inv_len * dimag_dqb(p));
      break;
    }
    case ConstraintKind::kSurfaceBending: {
      const Rod& rod = ctx.rods[block.rod];
      const int j = block.loc;
      const double la = rod.rest.lengths[j - 1];
      const double lb = rod.rest.lengths[j];
      const double lap = (rod.state.scales[j + 1] - rod.state.scales[j]) / lb -
                         (rod.state.scales[j] - rod.state.scales[j - 1]) / la;
      ev.W[0] = lap - rod.rest.scale_laplacians[j - 1];
      push_scale(ev, ctx.layout->vertex_slot(block.rod, j - 1), Vec3(1.0 / la, 0, 0));
      push_scale(ev, ctx.layout->vertex_slot(block.rod, j), Vec3(-1.0 / la - 1.0 / lb, 0, 0));
      push_scale(ev, ctx.layout->vertex_slot(block.rod, j + 1), Vec3(1.0 / lb, 0, 0));
      break;
    }
    case ConstraintKind::kVolumeStretch: {
      // Anchored to the as-built lengths so activation keeps absolute volume.
      const Rod& rod = ctx.rods[block.rod];
      const int e = block.loc;
      const double l0 = rod.rest.initial_lengths[e];
      const Mat3 R = rod.state.frames[e].toRotationMatrix();
      const Vec3 w = R.col(2);
      const double tbar = rod.rest.tangent_dots[e];
      const double smid = 0.5 * (rod.state.scales[e] + rod.state.scales[e + 1]);
      const double smid_rest = 0.5 * (rod.rest.scales[e] + rod.rest.scales[e + 1]);
      const Vec3 dzc = (rod.state.centers[e + 1] - rod.state.centers[e]) / l0;
      ev.W = smid * smid * dzc - smid_rest * smid_rest * tbar * w;
      push_center(ev, ctx.layout->vertex_slot(block.rod, e), Mat3::Identity() * (-smid * smid / l0));
      push_center(ev, ctx.layout->vertex_slot(block.rod, e + 1), Mat3::Identity() * (smid * smid / l0));
      push_scale(ev, ctx.layout->vertex_slot(block.rod, e), smid * dzc);
      push_scale(ev, ctx.layout->vertex_slot(block.rod, e + 1), smid * dzc);
      push_theta(ev, ctx.layout->element_slot(block.rod, e),
                 -smid_rest * smid_rest * tbar * axis_column_derivative(R));
      break;
    }
    case ConstraintKind::kVolumeBendU:
    case ConstraintKind::kVolumeBendV: {
      const Rod& rod = ctx.rods[block.rod];
      const int j = block.loc;
      const int comp = block.kind == ConstraintKind::kVolumeBendU ? 0 : 1;
      const double la0 = rod.rest.initial_lengths[j - 1];
      const double lb0 = rod.rest.initial_lengths[j];
      const Quat p = relative_rotation(rod.state.frames[j - 1], rod.state.frames[j]);
      const double inv_len0 = 4.0 / (la0 + lb0);
      const double omega_c = inv_len0 * imag(p)[comp];
      // Rest Darboux rescaled onto the as-built lengths.
      const double rest_omega_c = rod.rest.darboux[j - 1][comp] *
                                  (rod.rest.lengths[j - 1] + rod.rest.lengths[j]) / (la0 + lb0);
      const double s = rod.state.scales[j];
      const double sbar = rod.rest.scales[j];
      ev.W[0] = s * s * s * omega_c - sbar * sbar * sbar * rest_omega_c;
      push_scale(ev, ctx.layout->vertex_slot(block.rod, j), Vec3(3.0 * s * s * omega_c, 0, 0));
      Mat3 da = s * s * s * inv_len0 * dimag_dqa(p);
      Mat3 db = s * s * s * inv_len0 * dimag_dqb(p);
      Mat3 ja = Mat3::Zero(), jb = Mat3::Zero();
      ja.row(0) = da.row(comp);
      jb.row(0) = db.row(comp);
      push_theta(ev, ctx.layout->element_slot(block.rod, j - 1), ja);
      push_theta(ev, ctx.layout->element_slot(block.rod, j), jb);
      break;
    }
    case ConstraintKind::kContact: {
      const PillGeometry a = resolve_pill(block.pill_a, ctx);
      const PillGeometry b = resolve_pill(block.aux, ctx);
      const double al = block.alpha, be = block.beta;
      const Vec3 ca = (1.0 - al) * a.c0 + al * a.c1;
      const Vec3 cb = (1.0 - be) * b.c0 + be * b.c1;
      const double ra = (1.0 - al) * a.r0 + al * a.r1;
      const double rb = (1.0 - be) * b.r0 + be * b.r1;
      Vec3 n = ca - cb;
      const double dist = n.norm();
      if (dist < 1e-12) {  // coincident closest points; no usable normal
        ev.dim = 1;
        ev.W[0] = 0.0;
        break;
      }
      n /= dist;
      ev.W[0] = dist - ra - rb;
      Mat3 jn = Mat3::Zero();
      jn.row(0) = n.transpose();
      if (a.v0 >= 0) {
        push_center(ev, a.v0, (1.0 - al) * jn);
        push_center(ev, a.v1, al * jn);
        push_scale(ev, a.v0, Vec3(-(1.0 - al) * a.rbar0, 0, 0));
        push_scale(ev, a.v1, Vec3(-al * a.rbar1, 0, 0));
      }
      if (b.v0 >= 0) {
        push_center(ev, b.v0, -(1.0 - be) * jn);
        push_center(ev, b.v1, -be * jn);
        push_scale(ev, b.v0, Vec3(-(1.0 - be) * b.rbar0, 0, 0));
        push_scale(ev, b.v1, Vec3(-be * b.rbar1, 0, 0));
      }
      break;
    }
    case ConstraintKind::kHalfPlane: {
      const Rod& rod = ctx.rods[block.rod];
      const HalfPlane& plane = ctx.planes[block.aux];
      const int v = block.loc;
      const double rbar = rod.rest.radii[v];
      ev.W[0] = plane.normal.dot(rod.state.centers[v]) - plane.offset -
                rod.state.scales[v] * rbar;
      Mat3 jn = Mat3::Zero();
      jn.row(0) = plane.normal.transpose();
      push_center(ev, ctx.layout->vertex_slot(block.rod, v), jn);
      push_scale(ev, ctx.layout->vertex_slot(block.rod, v), Vec3(-rbar, 0, 0));
      break;
    }
    case ConstraintKind::kPin: {
      const Rod& rod = ctx.rods[block.rod];
      const int v = block.loc;
      ev.W = rod.state.centers[v] - ctx.pin_targets[block.aux];
      push_center(ev, ctx.layout->vertex_slot(block.rod, v), Mat3::Identity());
      break;
    }
  }
  return ev;
}

namespace {

inline double inverse_stiffness(double k) {
  if (std::isinf(k)) return 0.0;
  if (k <= 0.0) return 1e30;  // disabled component: effectively free
  return std::min(1.0 / k, 1e30);
}

}  // namespace

std::vector<ConstraintBlock> assemble_rod_constraints(const Rod& rod, const MaterialParams& mat,
                                                      int rod_index, const AssemblyOptions& opts) {
  mat.validate();
  rod.rest.validate();
  std::vector<ConstraintBlock> blocks;
  const RodRestPose& rest = rod.rest;
  const int m = rest.element_count();
  const double kxy = mat.stretch_x + mat.stretch_y;
  const double bxy = mat.bend_x + mat.bend_y;

  auto emit = [&](ConstraintKind kind, int loc, const Vec3& stiff) {
    if (stiff.maxCoeff() <= 0.0) return;
    ConstraintBlock b;
    b.kind = kind;
    b.rod = rod_index;
    b.loc = loc;
    b.stiffness = stiff;
    blocks.push_back(b);
  };

  for (int e = 0; e < m; ++e) {
    const double rmid = 0.5 * (rest.radii[e] + rest.radii[e + 1]);
    const double a2 = kPi * rmid * rmid;
    const double a4 = 0.25 * kPi * rmid * rmid * rmid * rmid;
    const double l = rest.lengths[e];
    const double l0 = rest.initial_lengths[e];
    emit(ConstraintKind::kStretchZ, e, Vec3::Constant(a2 * mat.stretch_z * l));
    if (opts.include_scale_kinds) {
      emit(ConstraintKind::kCrossSection, e, Vec3(a2 * kxy * l, 0, 0));
      emit(ConstraintKind::kSurfaceStretch, e, Vec3(a4 * kxy * l, 0, 0));
      emit(ConstraintKind::kVolumeStretch, e, Vec3::Constant(a2 * mat.volume * l0));
    }
  }
  for (int j = 1; j < m; ++j) {
    const double rv = rest.radii[j];
    const double a4 = 0.25 * kPi * rv * rv * rv * rv;
    const double lw = 0.5 * (rest.lengths[j - 1] + rest.lengths[j]);
    const double lw0 = 0.5 * (rest.initial_lengths[j - 1] + rest.initial_lengths[j]);
    emit(ConstraintKind::kBendTwist, j,
         Vec3(a4 * mat.stretch_z * lw, a4 * mat.stretch_z * lw, a4 * kxy * lw));
    if (opts.include_scale_kinds) {
      emit(ConstraintKind::kSurfaceBending, j, Vec3(a4 * bxy * lw, 0, 0));
      emit(ConstraintKind::kVolumeBendU, j, Vec3(2.0 * a4 * mat.volume * lw0, 0, 0));
      emit(ConstraintKind::kVolumeBendV, j, Vec3(2.0 * a4 * mat.volume * lw0, 0, 0));
    }
  }
  return blocks;
}

void refresh_stiffness(std::span<ConstraintBlock> blocks, std::span<const Rod> rods,
                       std::span<const MaterialParams> materials) {
  for (ConstraintBlock& b : blocks) {
    if (b.rod < 0) continue;
    const Rod& rod = rods[b.rod];
    const RodRestPose& rest = rod.rest;
    const MaterialParams& mat = materials[rod.material];
    const double kxy = mat.stretch_x + mat.stretch_y;
    switch (b.kind) {
      case ConstraintKind::kStretchZ: {
        const double rmid = 0.5 * (rest.radii[b.loc] + rest.radii[b.loc + 1]);
        b.stiffness = Vec3::Constant(kPi * rmid * rmid * mat.stretch_z * rest.lengths[b.loc]);
        break;
      }
      case ConstraintKind::kCrossSection: {
        const double rmid = 0.5 * (rest.radii[b.loc] + rest.radii[b.loc + 1]);
        b.stiffness = Vec3(kPi * rmid * rmid * kxy * rest.lengths[b.loc], 0, 0);
        break;
      }
      case ConstraintKind::kSurfaceStretch: {
        const double rmid = 0.5 * (rest.radii[b.loc] + rest.radii[b.loc + 1]);
        const double a4 = 0.25 * kPi * std::pow(rmid, 4);
        b.stiffness = Vec3(a4 * kxy * rest.lengths[b.loc], 0, 0);
        break;
      }
      case ConstraintKind::kBendTwist: {
        const double a4 = 0.25 * kPi * std::pow(rest.radii[b.loc], 4);
        const double lw = 0.5 * (rest.lengths[b.loc - 1] + rest.lengths[b.loc]);
        b.stiffness = Vec3(a4 * mat.stretch_z * lw, a4 * mat.stretch_z * lw, a4 * kxy * lw);
        break;
      }
      case ConstraintKind::kSurfaceBending: {
        const double a4 = 0.25 * kPi * std::pow(rest.radii[b.loc], 4);
        const double lw = 0.5 * (rest.lengths[b.loc - 1] + rest.lengths[b.loc]);
        b.stiffness = Vec3(a4 * (mat.bend_x + mat.bend_y) * lw, 0, 0);
        break;
      }
      default:
        break;  // volume kinds use as-built lengths, contacts are per step
    }
  }
}

void SweepScratch::resize(const DofLayout& layout) {
  center_sum.assign(layout.total_vertices, Vec3::Zero());
  scale_sum.assign(layout.total_vertices, 0.0);
  theta_sum.assign(layout.total_elements, Vec3::Zero());
  center_count.assign(layout.total_vertices, 0);
  scale_count.assign(layout.total_vertices, 0);
  theta_count.assign(layout.total_elements, 0);
}

namespace {

struct BlockUpdate {
  bool active = false;
  bool singular = false;
  bool finite = true;
  int n_c = 0, n_s = 0, n_t = 0;
  int c_slot[4];
  int s_slot[4];
  int t_slot[2];
  Vec3 dc[4];
  double ds[4];
  Vec3 dt[2];
  Vec3 dlambda = Vec3::Zero();
};

// Generalized compliant projection of one constraint against the snapshot.
BlockUpdate solve_block(const ConstraintBlock& block, const EvalContext& ctx, double h,
                        double beta) {
  BlockUpdate up;
  const ResidualEval ev = eval_constraint(block, ctx);
  const int dim = ev.dim;

  if (block.unilateral && ev.W[0] >= 0.0 && block.lambda[0] == 0.0) return up;

  const DofLayout& layout = *ctx.layout;
  const double h2 = h * h;

  Mat3 M = Mat3::Zero();
  for (int i = 0; i < ev.n_centers; ++i) {
    const double invw = layout.inv_center[ev.center_slot[i]];
    if (invw == 0.0) continue;
    M.topLeftCorner(dim, dim).noalias() +=
        h2 * invw * ev.center_jac[i].topRows(dim) * ev.center_jac[i].topRows(dim).transpose();
  }
  for (int i = 0; i < ev.n_scales; ++i) {
    const double invw = layout.inv_scale[ev.scale_slot[i]];
    if (invw == 0.0) continue;
    M.topLeftCorner(dim, dim).noalias() +=
        h2 * invw * ev.scale_jac[i].head(dim) * ev.scale_jac[i].head(dim).transpose();
  }
  for (int i = 0; i < ev.n_thetas; ++i) {
    const Vec3& invw = layout.inv_theta[ev.theta_slot[i]];
    const auto J = ev.theta_jac[i].topRows(dim);
    M.topLeftCorner(dim, dim).noalias() += h2 * J * invw.asDiagonal() * J.transpose();
  }

  Vec3 kinv = Vec3::Zero();
  for (int d = 0; d < dim; ++d) {
    kinv[d] = inverse_stiffness(block.stiffness[d]);
    M(d, d) += kinv[d];
  }

  Vec3 rhs = Vec3::Zero();
  for (int d = 0; d < dim; ++d) rhs[d] = ev.W[d] - kinv[d] * block.lambda[d];

  Vec3 dlambda = Vec3::Zero();
  if (dim == 1) {
    if (M(0, 0) <= 1e-250) {
      up.singular = true;
      return up;
    }
    dlambda[0] = beta * rhs[0] / M(0, 0);
  } else {
    const Mat3 Mf = M;
    const double md = std::max(Mf.cwiseAbs().maxCoeff(), 1e-300);
    if (std::abs(Mf.determinant()) <= 1e-14 * md * md * md) {
      up.singular = true;
      return up;
    }
    dlambda = beta * Mf.inverse() * rhs;
  }

  if (block.unilateral && block.lambda[0] + dlambda[0] > 0.0) {
    dlambda[0] = -block.lambda[0];
  }

  up.active = true;
  up.dlambda = dlambda;
  up.finite = dlambda.allFinite();
  up.n_c = ev.n_centers;
  up.n_s = ev.n_scales;
  up.n_t = ev.n_thetas;
  for (int i = 0; i < ev.n_centers; ++i) {
    const int slot = ev.center_slot[i];
    up.c_slot[i] = slot;
    up.dc[i] = -h2 * layout.inv_center[slot] *
               (ev.center_jac[i].topRows(dim).transpose() * dlambda.head(dim));
    if (!up.dc[i].allFinite()) up.finite = false;
  }
  for (int i = 0; i < ev.n_scales; ++i) {
    const int slot = ev.scale_slot[i];
    up.s_slot[i] = slot;
    up.ds[i] = -h2 * layout.inv_scale[slot] * ev.scale_jac[i].head(dim).dot(dlambda.head(dim));
    if (!std::isfinite(up.ds[i])) up.finite = false;
  }
  for (int i = 0; i < ev.n_thetas; ++i) {
    const int slot = ev.theta_slot[i];
    up.t_slot[i] = slot;
    const Vec3 jt = ev.theta_jac[i].topRows(dim).transpose() * dlambda.head(dim);
    up.dt[i] = -h2 * layout.inv_theta[slot].cwiseProduct(jt);
    if (!up.dt[i].allFinite()) up.finite = false;
  }
  return up;
}

}  // namespace

SweepOutcome jacobi_sweep(std::span<ConstraintBlock> blocks, std::span<Rod> rods,
                          const EvalContext& ctx, double h, double beta, SweepScratch& scratch) {
  const DofLayout& layout = *ctx.layout;
  const int n = static_cast<int>(blocks.size());
  SweepOutcome outcome;

  static thread_local std::vector<BlockUpdate> updates;
  updates.resize(static_cast<std::size_t>(n));
  parallel_for(n, thread_count(),
               [&](int i) { updates[static_cast<std::size_t>(i)] = solve_block(blocks[i], ctx, h, beta); });

  std::fill(scratch.center_sum.begin(), scratch.center_sum.end(), Vec3::Zero());
  std::fill(scratch.scale_sum.begin(), scratch.scale_sum.end(), 0.0);
  std::fill(scratch.theta_sum.begin(), scratch.theta_sum.end(), Vec3::Zero());
  std::fill(scratch.center_count.begin(), scratch.center_count.end(), 0);
  std::fill(scratch.scale_count.begin(), scratch.scale_count.end(), 0);
  std::fill(scratch.theta_count.begin(), scratch.theta_count.end(), 0);

  for (int i = 0; i < n; ++i) {
    BlockUpdate& up = updates[static_cast<std::size_t>(i)];
    if (up.singular) {
      ++outcome.skipped_singular;
      continue;
    }
    if (!up.active) continue;
    if (!up.finite) {
      throw SimulationError(std::string("non-finite update from constraint ") +
                            kind_name(blocks[i].kind) + " #" + std::to_string(i));
    }
    ++outcome.active;
    blocks[i].lambda += up.dlambda;
    for (int k = 0; k < up.n_c; ++k) {
      scratch.center_sum[up.c_slot[k]] += up.dc[k];
      ++scratch.center_count[up.c_slot[k]];
    }
    for (int k = 0; k < up.n_s; ++k) {
      scratch.scale_sum[up.s_slot[k]] += up.ds[k];
      ++scratch.scale_count[up.s_slot[k]];
    }
    for (int k = 0; k < up.n_t; ++k) {
      scratch.theta_sum[up.t_slot[k]] += up.dt[k];
      ++scratch.theta_count[up.t_slot[k]];
    }
  }

  // Averaged application, then the scale floor and frame renormalization.
  for (int slot = 0; slot < layout.total_vertices; ++slot) {
    const int rod = layout.vertex_rod[slot];
    const int v = layout.vertex_local[slot];
    if (scratch.center_count[slot] > 0) {
      rods[rod].state.centers[v] += scratch.center_sum[slot] / scratch.center_count[slot];
    }
    if (scratch.scale_count[slot] > 0) {
      double s = rods[rod].state.scales[v] + scratch.scale_sum[slot] / scratch.scale_count[slot];
      rods[rod].state.scales[v] = std::max(s, kMinScale);
    }
  }
  for (int slot = 0; slot < layout.total_elements; ++slot) {
    if (scratch.theta_count[slot] == 0) continue;
    const int rod = layout.element_rod[slot];
    const int e = layout.element_local[slot];
    const Vec3 dtheta = scratch.theta_sum[slot] / scratch.theta_count[slot];
    rods[rod].state.frames[e] = apply_increment(rods[rod].state.frames[e], dtheta);
  }
  return outcome;
}

std::vector<double> elastic_residual_norms(std::span<const ConstraintBlock> blocks,
                                           const EvalContext& ctx) {
  std::vector<double> num(kElasticKindCount, 0.0);
  std::vector<double> den(kElasticKindCount, 0.0);
  for (const ConstraintBlock& b : blocks) {
    const int k = static_cast<int>(b.kind);
    if (k >= kElasticKindCount) continue;
    const RodRestPose& rest = ctx.rods[b.rod].rest;
    double lw = 0.0;
    switch (b.kind) {
      case ConstraintKind::kStretchZ:
      case ConstraintKind::kCrossSection:
      case ConstraintKind::kSurfaceStretch:
        lw = rest.lengths[b.loc];
        break;
      case ConstraintKind::kVolumeStretch:
        lw = rest.initial_lengths[b.loc];
        break;
      case ConstraintKind::kBendTwist:
      case ConstraintKind::kSurfaceBending:
        lw = 0.5 * (rest.lengths[b.loc - 1] + rest.lengths[b.loc]);
        break;
      case ConstraintKind::kVolumeBendU:
      case ConstraintKind::kVolumeBendV:
        lw = 0.5 * (rest.initial_lengths[b.loc - 1] + rest.initial_lengths[b.loc]);
        break;
      default:
        break;
    }
    const ResidualEval ev = eval_constraint(b, ctx);
    num[k] += lw * ev.W.head(ev.dim).squaredNorm();
    den[k] += lw;
  }
  std::vector<double> out(kElasticKindCount, 0.0);
  for (int k = 0; k < kElasticKindCount; ++k) {
    if (den[k] > 0) out[k] = std::sqrt(num[k] / den[k]);
  }
  return out;
}

}  // namespace vrod
