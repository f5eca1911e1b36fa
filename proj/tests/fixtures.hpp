#pragma once

// Shared synthetic subjects for the tracking tests.

#include <random>

#include "hdhuman/core/mesh.hpp"
#include "hdhuman/tracking/kinematics.hpp"

namespace fixture {

using hdhuman::Point3;
using hdhuman::Vec3;
using hdhuman::tracking::KinematicParams;
using hdhuman::tracking::KinematicTree;

/// Four-joint chain, not collinear, about 1.3 m long.
inline KinematicTree chain_tree() {
  return KinematicTree({-1, 0, 1, 2}, {{0, 0, 0}, {0.02, 0.45, 0.03}, {0.1, 0.9, -0.02}, {0.25, 1.3, 0.0}});
}

/// Closed elliptical tube around the chain; the flattened cross-section
/// makes twist about each bone observable.
inline hdhuman::Mesh chain_tube(double spacing = 0.05, int sides = 16) {
  const KinematicTree t = chain_tree();
  return hdhuman::make_tube(t.rest(), 0.09, 0.05, sides, spacing);
}

/// Random rotations with magnitude below `max_angle` on every joint.
inline KinematicParams random_pose(int joints, std::mt19937_64& rng, double max_angle, double max_shift = 0.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  KinematicParams p = KinematicParams::zero(joints);
  for (int j = 0; j < joints; ++j) {
    const Vec3 axis = Vec3(u(rng), u(rng), u(rng)).normalized();
    p.theta.row(j) = (axis * max_angle * std::abs(u(rng))).transpose();
  }
  p.root_translation = Vec3(u(rng), u(rng), u(rng)) * max_shift;
  return p;
}

}  // namespace fixture
