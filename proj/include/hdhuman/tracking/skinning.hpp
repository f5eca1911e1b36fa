#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "hdhuman/core/mesh.hpp"
#include "hdhuman/tracking/kinematics.hpp"

namespace hdhuman::tracking {

inline constexpr int kMaxInfluences = 4;

struct Influence {
  int joint = 0;
  double weight = 0.0;

  bool operator==(const Influence&) const = default;
};

/// Sparse per-vertex blend weights over joints.
struct SkinningWeights {
  std::vector<std::vector<Influence>> vertices;

  std::size_t vertex_count() const { return vertices.size(); }

  void validate(int joint_count) const {
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      const auto& inf = vertices[v];
      if (inf.empty() || inf.size() > static_cast<std::size_t>(kMaxInfluences))
        throw Error(ErrorCode::kShape, "vertex " + std::to_string(v) + " needs 1 to 4 influences");
      double sum = 0.0;
      for (const auto& i : inf) {
        if (i.joint < 0 || i.joint >= joint_count) throw Error(ErrorCode::kShape, "influence joint out of range");
        if (!(i.weight >= 0.0)) throw Error(ErrorCode::kShape, "negative skinning weight");
        sum += i.weight;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw Error(ErrorCode::kShape, "weights of vertex " + std::to_string(v) + " do not sum to 1");
    }
  }
};

/// Bone from a joint to one of its children; the parent's rotation drives it.
struct Bone {
  int owner;
  Point3 a;
  Point3 b;
};

inline std::vector<Bone> bones_of(const KinematicTree& tree) {
  std::vector<Bone> bones;
  for (int j = 0; j < tree.joint_count(); ++j)
    if (tree.parent(j) != -1) bones.push_back({tree.parent(j), tree.rest(tree.parent(j)), tree.rest(j)});
  return bones;
}

inline double squared_distance_to_segment(const Point3& p, const Point3& a, const Point3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp(ab.dot(p - a) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).squaredNorm();
}

/// Inverse squared distance to the k nearest bone segments, normalised and
/// merged per owning joint. A vertex lying on a bone is bound to it alone.
inline SkinningWeights rig(const Mesh& mesh, const KinematicTree& tree, int k = kMaxInfluences) {
  if (k < 1 || k > kMaxInfluences) throw Error(ErrorCode::kConfiguration, "influence count must be in [1, 4]");
  const std::vector<Bone> bones = bones_of(tree);
  SkinningWeights out;
  out.vertices.resize(mesh.vertices.size());
  if (bones.empty()) {
    for (auto& v : out.vertices) v = {{tree.root(), 1.0}};
    return out;
  }
  std::vector<std::pair<double, int>> dist(bones.size());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    for (std::size_t b = 0; b < bones.size(); ++b)
      dist[b] = {squared_distance_to_segment(mesh.vertices[v], bones[b].a, bones[b].b), static_cast<int>(b)};
    const std::size_t keep = std::min<std::size_t>(k, bones.size());
    std::partial_sort(dist.begin(), dist.begin() + keep, dist.end());
    auto& inf = out.vertices[v];
    if (dist[0].first == 0.0) {
      inf = {{bones[dist[0].second].owner, 1.0}};
      continue;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < keep; ++i) total += 1.0 / dist[i].first;
    for (std::size_t i = 0; i < keep; ++i) {
      const int owner = bones[dist[i].second].owner;
      const double w = (1.0 / dist[i].first) / total;
      auto it = std::find_if(inf.begin(), inf.end(), [&](const Influence& x) { return x.joint == owner; });
      if (it == inf.end())
        inf.push_back({owner, w});
      else
        it->weight += w;
    }
    std::sort(inf.begin(), inf.end(), [](const Influence& a, const Influence& b) { return a.joint < b.joint; });
  }
  return out;
}

inline void check_weights(const SkinningWeights& weights, std::size_t vertex_count) {
  if (weights.vertex_count() != vertex_count)
    throw Error(ErrorCode::kShape, "skinning weights cover " + std::to_string(weights.vertex_count()) +
                                       " vertices, mesh has " + std::to_string(vertex_count));
}

inline Point3 skin_vertex(const Point3& v, const std::vector<Influence>& inf, const Pose& pose) {
  Vec3 shift = Vec3::Zero();
  for (const auto& i : inf) shift += i.weight * (pose.transforms[i.joint].apply(v) - v);
  return v + shift;
}

/// Linear blend skinning of the canonical mesh. Connectivity and vertex
/// attributes are carried over unchanged; theta = 0 returns the input
/// positions bit for bit.
inline Mesh lbs_deform(const Mesh& canonical, const SkinningWeights& weights, const KinematicTree& tree,
                       const KinematicParams& params) {
  check_weights(weights, canonical.vertices.size());
  const Pose p = pose(tree, params);
  Mesh out = canonical;
  for (std::size_t v = 0; v < canonical.vertices.size(); ++v)
    out.vertices[v] = skin_vertex(canonical.vertices[v], weights.vertices[v], p);
  return out;
}

/// d(skinned vertex)/d(packed params) for one vertex: 3 x (3J + 3).
inline void skinned_vertex_jacobian(const KinematicTree& tree, const Pose& pose, const Point3& v,
                                    const std::vector<Influence>& inf, Eigen::Ref<Eigen::MatrixXd> out) {
  out.setZero();
  const int n = tree.joint_count();
  double total = 0.0;
  for (const auto& i : inf) {
    total += i.weight;
    const Vec3 posed = pose.transforms[i.joint].apply(v);
    for (int a = i.joint; a != -1; a = tree.parent(a))
      out.block<3, 3>(0, 3 * a) += i.weight * point_rotation_jacobian(pose, a, posed);
  }
  out.block<3, 3>(0, 3 * n) = total * Mat3::Identity();
}

}  // namespace hdhuman::tracking
