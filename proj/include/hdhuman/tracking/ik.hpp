#pragma once

#include <cmath>
#include <vector>

#include "hdhuman/tracking/gauss_newton.hpp"
#include "hdhuman/tracking/kinematics.hpp"

namespace hdhuman::tracking {

struct IkOptions {
  double huber_delta = 0.01;  // meters; quadratic below, linear above
  GaussNewtonOptions solver;
  /// Joints to fit; empty means all. Unresolved detections are masked out.
  std::vector<bool> active;
};

struct IkResult {
  KinematicParams params;
  GaussNewtonResult report;
};

/// Scale that turns a joint error e into a residual whose squared norm is
/// twice the Huber penalty of |e|.
inline double huber_scale(double s, double delta) {
  if (s <= delta) return 1.0;
  return std::sqrt(2.0 * delta * s - delta * delta) / s;
}

inline double huber_penalty(double s, double delta) {
  return s <= delta ? 0.5 * s * s : delta * (s - 0.5 * delta);
}

/// Fits joint rotations and root translation so the posed canonical skeleton
/// (the tree's rest joints) meets `target`, starting from theta = 0.
inline IkResult solve_ik(const KinematicTree& tree, const Skeleton3D& target, const IkOptions& options = {}) {
  const int n = tree.joint_count();
  if (static_cast<int>(target.size()) != n)
    throw Error(ErrorCode::kShape, "target skeleton has " + std::to_string(target.size()) + " joints, tree has " +
                                       std::to_string(n));
  if (!options.active.empty() && static_cast<int>(options.active.size()) != n)
    throw Error(ErrorCode::kShape, "joint mask does not match joint count");
  if (!(options.huber_delta > 0.0)) throw Error(ErrorCode::kConfiguration, "Huber transition must be positive");
  auto active = [&](int j) { return options.active.empty() || options.active[j]; };

  auto residual = [&](const Vector& x) {
    const Pose p = pose(tree, KinematicParams::unpack(x));
    Vector r = Vector::Zero(3 * n);
    for (int j = 0; j < n; ++j) {
      if (!active(j)) continue;
      const Vec3 e = p.joints[j] - target[j];
      r.segment<3>(3 * j) = huber_scale(e.norm(), options.huber_delta) * e;
    }
    return r;
  };
  // Reweighted Jacobian: the Huber scale is frozen at the current errors, so
  // the step is the weighted least-squares step for the linearised joints.
  auto jacobian = [&](const Vector& x) {
    const Pose p = pose(tree, KinematicParams::unpack(x));
    Eigen::MatrixXd jac = joint_jacobian(tree, p);
    for (int j = 0; j < n; ++j) {
      const double w = active(j) ? huber_scale((p.joints[j] - target[j]).norm(), options.huber_delta) : 0.0;
      jac.middleRows<3>(3 * j) *= w;
    }
    return jac;
  };

  IkResult out;
  out.report = gauss_newton(residual, jacobian, KinematicParams::zero(n).pack(), options.solver);
  out.params = KinematicParams::unpack(out.report.x);
  out.params.wrap();
  return out;
}

}  // namespace hdhuman::tracking
