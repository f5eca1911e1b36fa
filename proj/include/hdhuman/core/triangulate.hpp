#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "hdhuman/core/camera.hpp"
#include "hdhuman/core/skeleton.hpp"

namespace hdhuman {

struct ViewObservation {
  const Camera* camera;
  const Skeleton2D* skeleton;
};

struct TriangulationOptions {
  double confidence_floor = 0.3;
};

struct TriangulatedSkeleton {
  Skeleton3D skeleton;
  /// resolved[j] is false when fewer than two views observed joint j above
  /// the confidence floor; the joint is then left at the origin.
  std::vector<bool> resolved;
  std::vector<int> view_counts;

  bool all_resolved() const {
    for (bool r : resolved)
      if (!r) return false;
    return true;
  }
};

namespace detail {

inline Eigen::Matrix<double, 3, 4> projection_matrix(const Camera& cam) {
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = cam.rotation();
  rt.col(3) = cam.translation();
  Eigen::Matrix<double, 3, 4> p = cam.intrinsics() * rt;
  // Scale so the third row's direction is a unit vector: the algebraic
  // residual then reads as depth times pixel error in every view.
  return p / p.block<1, 3>(2, 0).norm();
}

}  // namespace detail

/// Confidence-weighted direct linear transform per joint.
inline Point3 triangulate_point(std::span<const std::pair<const Camera*, Joint2D>> views) {
  Eigen::MatrixXd a(2 * views.size(), 4);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto p = detail::projection_matrix(*views[i].first);
    const Joint2D& obs = views[i].second;
    a.row(2 * i) = obs.confidence * (obs.pixel.x() * p.row(2) - p.row(0));
    a.row(2 * i + 1) = obs.confidence * (obs.pixel.y() * p.row(2) - p.row(1));
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Vec4 h = svd.matrixV().col(3);
  return h.head<3>() / h.w();
}

inline TriangulatedSkeleton triangulate_skeleton(std::span<const ViewObservation> observations,
                                                 const TriangulationOptions& options = {}) {
  TriangulatedSkeleton out;
  if (observations.empty()) return out;
  const std::size_t joint_count = observations.front().skeleton->joints.size();
  for (const auto& obs : observations)
    if (obs.skeleton->joints.size() != joint_count)
      throw Error(ErrorCode::kInput, "views disagree on joint count");

  out.skeleton.joints.assign(joint_count, Point3::Zero());
  out.resolved.assign(joint_count, false);
  out.view_counts.assign(joint_count, 0);
  std::vector<std::pair<const Camera*, Joint2D>> views;
  for (std::size_t j = 0; j < joint_count; ++j) {
    views.clear();
    for (const auto& obs : observations) {
      const Joint2D& joint = obs.skeleton->joints[j];
      if (joint.confidence >= options.confidence_floor && joint.confidence > 0.0)
        views.emplace_back(obs.camera, joint);
    }
    out.view_counts[j] = static_cast<int>(views.size());
    if (views.size() < 2) continue;
    const Point3 p = triangulate_point(views);
    if (!p.allFinite()) continue;
    out.skeleton.joints[j] = p;
    out.resolved[j] = true;
  }
  return out;
}

}  // namespace hdhuman
