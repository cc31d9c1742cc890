#pragma once

// Central-difference verification of constraint Jacobians.
//
// For every DOF slot a residual reports, the analytic column is compared
// against (W(x + eps) - W(x - eps)) / (2 eps). Orientation DOFs are perturbed
// with body-frame right increments, matching the analytic convention.
// Unilateral constraints must be probed in configurations whose violation
// margin exceeds eps, otherwise the clamp kink breaks the difference quotient.

#include <algorithm>
#include <cmath>
#include <vector>

#include "vrod/constraints.h"
#include "vrod/layout.h"
#include "vrod/rod.h"

namespace vrod::test {

/// Max relative Jacobian error of one block at the rods' current state.
/// `rods` must be the same array the context's span views; it is perturbed
/// during probing and restored before returning. The error is relative to
/// max(1, largest analytic entry).
inline double fd_check_block(const ConstraintBlock& block, std::vector<Rod>& rods,
                             const EvalContext& ctx, double eps = 1e-6) {
  const ResidualEval base = eval_constraint(block, ctx);
  double scale = 1.0;
  for (int i = 0; i < base.n_centers; ++i) {
    scale = std::max(scale, base.center_jac[i].cwiseAbs().maxCoeff());
  }
  for (int i = 0; i < base.n_scales; ++i) {
    scale = std::max(scale, base.scale_jac[i].cwiseAbs().maxCoeff());
  }
  for (int i = 0; i < base.n_thetas; ++i) {
    scale = std::max(scale, base.theta_jac[i].cwiseAbs().maxCoeff());
  }

  const DofLayout& layout = *ctx.layout;
  double worst = 0.0;

  for (int i = 0; i < base.n_centers; ++i) {
    const int slot = base.center_slot[i];
    Rod& rod = rods[layout.vertex_rod[slot]];
    Vec3& c = rod.state.centers[layout.vertex_local[slot]];
    for (int axis = 0; axis < 3; ++axis) {
      const double saved = c[axis];
      const double step = eps * std::max(1.0, std::abs(saved));
      c[axis] = saved + step;
      const Vec3 plus = eval_constraint(block, ctx).W;
      c[axis] = saved - step;
      const Vec3 minus = eval_constraint(block, ctx).W;
      c[axis] = saved;
      const Vec3 fd = (plus - minus) / (2.0 * step);
      for (int d = 0; d < base.dim; ++d) {
        worst = std::max(worst, std::abs(fd[d] - base.center_jac[i](d, axis)) / scale);
      }
    }
  }

  for (int i = 0; i < base.n_scales; ++i) {
    const int slot = base.scale_slot[i];
    Rod& rod = rods[layout.vertex_rod[slot]];
    double& s = rod.state.scales[layout.vertex_local[slot]];
    const double saved = s;
    const double step = eps * std::max(1.0, std::abs(saved));
    s = saved + step;
    const Vec3 plus = eval_constraint(block, ctx).W;
    s = saved - step;
    const Vec3 minus = eval_constraint(block, ctx).W;
    s = saved;
    const Vec3 fd = (plus - minus) / (2.0 * step);
    for (int d = 0; d < base.dim; ++d) {
      worst = std::max(worst, std::abs(fd[d] - base.scale_jac[i][d]) / scale);
    }
  }

  for (int i = 0; i < base.n_thetas; ++i) {
    const int slot = base.theta_slot[i];
    Rod& rod = rods[layout.element_rod[slot]];
    Quat& q = rod.state.frames[layout.element_local[slot]];
    const Quat saved = q;
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 theta = Vec3::Zero();
      theta[axis] = eps;
      q = apply_increment(saved, theta);
      const Vec3 plus = eval_constraint(block, ctx).W;
      theta[axis] = -eps;
      q = apply_increment(saved, theta);
      const Vec3 minus = eval_constraint(block, ctx).W;
      q = saved;
      const Vec3 fd = (plus - minus) / (2.0 * eps);
      for (int d = 0; d < base.dim; ++d) {
        worst = std::max(worst, std::abs(fd[d] - base.theta_jac[i](d, axis)) / scale);
      }
    }
  }

  return worst;
}

}  // namespace vrod::test
