#pragma once

#include <vector>

#include "hdhuman/tracking/correspondence.hpp"
#include "hdhuman/tracking/gauss_newton.hpp"
#include "hdhuman/tracking/skinning.hpp"

namespace hdhuman::tracking {

struct RefineOptions {
  CorrespondenceMode correspondence = CorrespondenceMode::kSurface;
  GaussNewtonOptions solver;
};

struct RefineResult {
  KinematicParams params;
  double energy_before = 0.0;  // sum of squared vertex-to-recon distances
  double energy_after = 0.0;
  GaussNewtonResult report;
};

namespace detail {

// Nearest-neighbour matches of the last evaluated parameter vector, so the
// Jacobian at an accepted iterate reuses the residual's correspondences.
struct MatchCache {
  Vector x;
  std::vector<Match> matches;

  template <class PointsFn>
  const std::vector<Match>& at(const Vector& at_x, const ClosestSurface& target, PointsFn&& points) {
    if (x.size() != at_x.size() || x != at_x) {
      const std::vector<Point3> pts = points(at_x);
      matches.resize(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) matches[i] = target.match(pts[i]);
      x = at_x;
    }
    return matches;
  }
};

}  // namespace detail

/// Re-fits the kinematic parameters so the skinned canonical mesh lies on the
/// reconstruction, re-associating nearest neighbours at every evaluation.
inline RefineResult rigid_refine(const KinematicParams& params0, const Mesh& canonical, const SkinningWeights& weights,
                                 const KinematicTree& tree, const Mesh& recon, const RefineOptions& options = {}) {
  check_params(tree, params0);
  check_weights(weights, canonical.vertices.size());
  const ClosestSurface target(recon, options.correspondence);
  const std::size_t nv = canonical.vertices.size();
  const int cols = 3 * tree.joint_count() + 3;

  auto skinned = [&](const Vector& x) {
    const Pose p = pose(tree, KinematicParams::unpack(x));
    std::vector<Point3> pts(nv);
    for (std::size_t v = 0; v < nv; ++v) pts[v] = skin_vertex(canonical.vertices[v], weights.vertices[v], p);
    return pts;
  };
  detail::MatchCache cache;
  auto residual = [&](const Vector& x) {
    const std::vector<Point3> pts = skinned(x);
    const auto& m = cache.at(x, target, [&](const Vector&) { return pts; });
    Vector r(3 * nv);
    for (std::size_t v = 0; v < nv; ++v) r.segment<3>(3 * v) = pts[v] - m[v].point;
    return r;
  };
  auto jacobian = [&](const Vector& x) {
    const auto& m = cache.at(x, target, skinned);
    const Pose p = pose(tree, KinematicParams::unpack(x));
    DenseJacobian jac(3 * nv, cols);
    Eigen::MatrixXd block(3, cols);
    for (std::size_t v = 0; v < nv; ++v) {
      skinned_vertex_jacobian(tree, p, canonical.vertices[v], weights.vertices[v], block);
      jac.middleRows<3>(3 * v) = m[v].residual_jacobian * block;
    }
    return jac;
  };

  RefineResult out;
  out.report = gauss_newton(residual, jacobian, params0.pack(), options.solver);
  out.energy_before = out.report.initial_cost;
  out.energy_after = out.report.final_cost;
  out.params = KinematicParams::unpack(out.report.x);
  out.params.wrap();
  return out;
}

}  // namespace hdhuman::tracking
