#pragma once

#include <algorithm>
#include <span>

#include "hdhuman/core/mesh.hpp"
#include "hdhuman/spatial/aabb_tree.hpp"

namespace hdhuman::tracking {

/// What "nearest neighbour on the reconstruction" means for data terms.
enum class CorrespondenceMode {
  kVertex,   // nearest reconstruction vertex
  kSurface,  // nearest point on any reconstruction triangle
};

struct Match {
  Point3 point;
  // d(p - point)/dp with the matched feature held fixed: identity for a
  // vertex, the normal projector for a face interior, the complement of the
  // edge direction for an edge.
  Mat3 residual_jacobian;
};

/// Exact nearest-neighbour queries against a fixed target mesh, which must
/// outlive this object.
class ClosestSurface {
 public:
  ClosestSurface(const Mesh& target, CorrespondenceMode mode) : mesh_(&target), mode_(mode) {
    if (target.vertices.empty()) throw Error(ErrorCode::kInvalidMesh, "correspondence target has no vertices");
    if (mode == CorrespondenceMode::kSurface) {
      if (target.triangles.empty()) throw Error(ErrorCode::kInvalidMesh, "correspondence target has no triangles");
      tree_ = spatial::AabbTree::over_triangles(target);
    } else {
      tree_ = spatial::AabbTree::over_points(target.vertices);
    }
  }

  CorrespondenceMode mode() const { return mode_; }

  Match match(const Point3& p) const {
    const spatial::ClosestPoint c = tree_.closest(p);
    if (mode_ == CorrespondenceMode::kVertex) return {c.point, Mat3::Identity()};
    const Triangle& t = mesh_->triangles[c.primitive];
    return {c.point, feature_jacobian(c.point, mesh_->vertices[t[0]], mesh_->vertices[t[1]], mesh_->vertices[t[2]])};
  }

 private:
  static Mat3 feature_jacobian(const Point3& q, const Point3& a, const Point3& b, const Point3& c) {
    const Vec3 n = (b - a).cross(c - a);
    const double area2 = n.squaredNorm();
    if (area2 == 0.0) return Mat3::Identity();
    // Barycentrics of q; a coordinate at zero means q sits on the opposite edge.
    const double wa = (b - q).cross(c - q).dot(n) / area2;
    const double wb = (c - q).cross(a - q).dot(n) / area2;
    const double wc = 1.0 - wa - wb;
    const double eps = 1e-12;
    const bool za = wa <= eps, zb = wb <= eps, zc = wc <= eps;
    const int zeros = za + zb + zc;
    if (zeros == 0) {
      const Vec3 u = n / std::sqrt(area2);
      return u * u.transpose();
    }
    if (zeros == 1) {
      const Vec3 e = (za ? c - b : zb ? a - c : b - a).normalized();
      return Mat3::Identity() - e * e.transpose();
    }
    return Mat3::Identity();
  }

  const Mesh* mesh_;
  CorrespondenceMode mode_;
  spatial::AabbTree tree_;
};

}  // namespace hdhuman::tracking
