#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hdhuman {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Continuous pixel coordinate; integer values are pixel centers.
using Pixel = Vec2;
/// World-space point in meters.
using Point3 = Vec3;

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

/// Rotation matrix of an axis-angle vector. A zero vector maps to the exact
/// identity, which keeps rest-pose evaluations bit-exact.
inline Mat3 rotation_from_vector(const Vec3& theta) {
  const double angle = theta.norm();
  if (angle == 0.0) return Mat3::Identity();
  const Mat3 k = skew(theta);
  double a, b;
  if (angle < 1e-6) {
    const double a2 = angle * angle;
    a = 1.0 - a2 / 6.0;
    b = 0.5 - a2 / 24.0;
  } else {
    a = std::sin(angle) / angle;
    b = (1.0 - std::cos(angle)) / (angle * angle);
  }
  return Mat3::Identity() + a * k + b * k * k;
}

/// Inverse of rotation_from_vector; the result has norm in [0, pi].
inline Vec3 rotation_to_vector(const Mat3& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

/// Right Jacobian of the exponential map: d(exp(theta) u)/d theta equals
/// -exp(theta) [u]x J_r(theta).
inline Mat3 right_jacobian(const Vec3& theta) {
  const double angle = theta.norm();
  const Mat3 k = skew(theta);
  if (angle < 1e-6) return Mat3::Identity() - 0.5 * k + (1.0 / 6.0) * k * k;
  const double a2 = angle * angle;
  return Mat3::Identity() - (1.0 - std::cos(angle)) / a2 * k +
         (angle - std::sin(angle)) / (a2 * angle) * k * k;
}

/// Re-wraps a rotation vector so its magnitude stays below pi.
inline Vec3 wrap_rotation_vector(const Vec3& theta) {
  const double angle = theta.norm();
  if (angle < M_PI) return theta;
  return rotation_to_vector(rotation_from_vector(theta));
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool valid() const { return (hi.array() >= lo.array()).all(); }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  double squared_distance(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(Vec3::Zero());
    return d.squaredNorm();
  }
};

}  // namespace hdhuman
