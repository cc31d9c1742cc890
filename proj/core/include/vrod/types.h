#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vrod {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;

// Scales are clamped to this lower bound after every solver correction so
// radii and inertia stay positive.
inline constexpr double kMinScale = 1e-4;

/// Runtime failure of a simulation step (non-finite state, diverged solve).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quaternion for a small body-frame rotation increment: [theta/2, 1], renormalized.
inline Quat small_rotation(const Vec3& theta) {
  Quat q(1.0, 0.5 * theta.x(), 0.5 * theta.y(), 0.5 * theta.z());
  q.normalize();
  return q;
}

/// Right-multiply a body-frame rotation increment onto q and renormalize.
inline Quat apply_increment(const Quat& q, const Vec3& theta) {
  Quat out = q * small_rotation(theta);
  out.normalize();
  return out;
}

/// Vector (imaginary) part of a quaternion.
inline Vec3 imag(const Quat& q) { return Vec3(q.x(), q.y(), q.z()); }

/// Cross-product matrix [v]x with [v]x * w == v.cross(w).
inline Mat3 cross_matrix(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

/// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
inline Quat minimal_rotation(const Vec3& from, const Vec3& to) {
  Quat q = Quat::FromTwoVectors(from, to);
  q.normalize();
  return q;
}

inline bool is_unit(const Quat& q, double tol = 1e-6) {
  return std::abs(q.norm() - 1.0) <= tol;
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

inline void require_index(bool cond, const std::string& what) {
  if (!cond) throw std::out_of_range(what);
}

inline void require_index(int i, int count, const std::string& what) {
  if (i < 0 || i >= count) throw std::out_of_range(what + " out of range");
}

}  // namespace vrod
