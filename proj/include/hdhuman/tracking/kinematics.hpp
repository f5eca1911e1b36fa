#pragma once

#include <vector>

#include <Eigen/Core>

#include "hdhuman/core/error.hpp"
#include "hdhuman/core/geometry.hpp"
#include "hdhuman/core/skeleton.hpp"

namespace hdhuman::tracking {

/// Rooted joint hierarchy with canonical (bind-pose) joint positions.
class KinematicTree {
 public:
  KinematicTree() = default;
  KinematicTree(std::vector<int> parents, std::vector<Point3> rest) : parents_(std::move(parents)), rest_(std::move(rest)) {
    const int n = static_cast<int>(parents_.size());
    if (n == 0) throw Error(ErrorCode::kConfiguration, "kinematic tree needs at least one joint");
    if (static_cast<int>(rest_.size()) != n) throw Error(ErrorCode::kShape, "rest positions do not match joint count");
    root_ = -1;
    children_.assign(n, {});
    for (int j = 0; j < n; ++j) {
      const int p = parents_[j];
      if (p == -1) {
        if (root_ != -1) throw Error(ErrorCode::kConfiguration, "kinematic tree has more than one root");
        root_ = j;
      } else if (p < 0 || p >= n || p == j) {
        throw Error(ErrorCode::kConfiguration, "invalid parent index for joint " + std::to_string(j));
      } else {
        children_[p].push_back(j);
      }
    }
    if (root_ == -1) throw Error(ErrorCode::kConfiguration, "kinematic tree has no root");
    // Breadth-first from the root; anything unreached sits on a cycle.
    order_.push_back(root_);
    for (std::size_t i = 0; i < order_.size(); ++i)
      for (int c : children_[order_[i]]) order_.push_back(c);
    if (static_cast<int>(order_.size()) != n) throw Error(ErrorCode::kConfiguration, "kinematic tree contains a cycle");
    for (const auto& p : rest_)
      if (!p.allFinite()) throw Error(ErrorCode::kShape, "non-finite rest joint position");
  }

  KinematicTree(const SkeletonLayout& layout, const Skeleton3D& rest) : KinematicTree(layout.parents, rest.joints) {}

  int joint_count() const { return static_cast<int>(parents_.size()); }
  int root() const { return root_; }
  int parent(int j) const { return parents_[j]; }
  const std::vector<int>& parents() const { return parents_; }
  const std::vector<int>& children(int j) const { return children_[j]; }
  const Point3& rest(int j) const { return rest_[j]; }
  const std::vector<Point3>& rest() const { return rest_; }
  /// Parents before children.
  const std::vector<int>& order() const { return order_; }

  bool is_ancestor_or_self(int a, int j) const {
    for (; j != -1; j = parents_[j])
      if (j == a) return true;
    return false;
  }

 private:
  std::vector<int> parents_;
  std::vector<Point3> rest_;
  std::vector<std::vector<int>> children_;
  std::vector<int> order_;
  int root_ = -1;
};

/// Per-joint rotation vectors (radians) plus a root translation (meters).
struct KinematicParams {
  Eigen::Matrix<double, Eigen::Dynamic, 3> theta;
  Vec3 root_translation = Vec3::Zero();

  static KinematicParams zero(int joints) {
    KinematicParams p;
    p.theta = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(joints, 3);
    return p;
  }

  int joint_count() const { return static_cast<int>(theta.rows()); }
  Vec3 rotation(int j) const { return theta.row(j).transpose(); }

  /// Flat layout [theta_0, ..., theta_{J-1}, root_t].
  Eigen::VectorXd pack() const {
    Eigen::VectorXd x(3 * theta.rows() + 3);
    for (Eigen::Index j = 0; j < theta.rows(); ++j) x.segment<3>(3 * j) = theta.row(j).transpose();
    x.tail<3>() = root_translation;
    return x;
  }

  static KinematicParams unpack(const Eigen::VectorXd& x) {
    if (x.size() < 3 || x.size() % 3 != 0) throw Error(ErrorCode::kShape, "parameter vector length must be 3J + 3");
    KinematicParams p = zero(static_cast<int>(x.size() / 3 - 1));
    for (Eigen::Index j = 0; j < p.theta.rows(); ++j) p.theta.row(j) = x.segment<3>(3 * j).transpose();
    p.root_translation = x.tail<3>();
    return p;
  }

  /// Keeps every rotation vector's magnitude below pi.
  void wrap() {
    for (Eigen::Index j = 0; j < theta.rows(); ++j) theta.row(j) = wrap_rotation_vector(rotation(j)).transpose();
  }
};

/// Affine map x -> linear * x + offset taking bind-pose points into the
/// posed world.
struct JointTransform {
  Mat3 linear = Mat3::Identity();
  Vec3 offset = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return linear * x + offset; }
};

struct Pose {
  std::vector<JointTransform> transforms;  // per joint, bind pose -> world
  std::vector<Point3> joints;              // posed joint positions
  std::vector<Mat3> right_jacobians;       // J_r(theta_j)
};

inline void check_params(const KinematicTree& tree, const KinematicParams& params) {
  if (params.joint_count() != tree.joint_count())
    throw Error(ErrorCode::kShape, "kinematic params have " + std::to_string(params.joint_count()) +
                                       " joints, tree has " + std::to_string(tree.joint_count()));
}

/// Composes joint rotations about their bind-pose positions from the root
/// outward. With theta = 0 and no translation every transform is the exact
/// identity.
inline Pose pose(const KinematicTree& tree, const KinematicParams& params) {
  check_params(tree, params);
  const int n = tree.joint_count();
  Pose out;
  out.transforms.resize(n);
  out.joints.resize(n);
  out.right_jacobians.resize(n);
  for (int j : tree.order()) {
    const Vec3 theta = params.rotation(j);
    const Mat3 r = rotation_from_vector(theta);
    const Vec3& c = tree.rest(j);
    const Vec3 pivot = c - r * c;
    out.right_jacobians[j] = right_jacobian(theta);
    const int p = tree.parent(j);
    JointTransform& t = out.transforms[j];
    if (p == -1) {
      t.linear = r;
      t.offset = pivot + params.root_translation;
      out.joints[j] = c + params.root_translation;
    } else {
      const JointTransform& tp = out.transforms[p];
      t.linear = tp.linear * r;
      t.offset = tp.linear * pivot + tp.offset;
      out.joints[j] = tp.apply(c);
    }
  }
  return out;
}

inline Skeleton3D forward_kinematics(const KinematicTree& tree, const KinematicParams& params) {
  return Skeleton3D{pose(tree, params).joints};
}

/// d(point)/d(theta_a) for a posed point carried rigidly by joint a or one of
/// its descendants: -M_a [u]x J_r(theta_a), u = M_a^T (point - p_a).
inline Eigen::Matrix3d point_rotation_jacobian(const Pose& pose, int a, const Vec3& posed_point) {
  const Mat3& m = pose.transforms[a].linear;
  const Vec3 u = m.transpose() * (posed_point - pose.joints[a]);
  return -m * skew(u) * pose.right_jacobians[a];
}

/// Jacobian of all posed joint positions (3J rows) with respect to the packed
/// parameters (3J + 3 columns).
inline Eigen::MatrixXd joint_jacobian(const KinematicTree& tree, const Pose& pose) {
  const int n = tree.joint_count();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(3 * n, 3 * n + 3);
  for (int k = 0; k < n; ++k) {
    jac.block<3, 3>(3 * k, 3 * n).setIdentity();
    // The joint rotates about itself, so only strict ancestors move it.
    for (int a = tree.parent(k); a != -1; a = tree.parent(a))
      jac.block<3, 3>(3 * k, 3 * a) = point_rotation_jacobian(pose, a, pose.joints[k]);
  }
  return jac;
}

}  // namespace hdhuman::tracking
