#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "hdhuman/core/geometry.hpp"
#include "hdhuman/core/mesh.hpp"

namespace hdhuman::spatial {

/// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

/// Ray/triangle intersection (Moller-Trumbore); returns the ray parameter.
inline std::optional<double> intersect_ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                                    const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-300) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tv = origin - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return e2.dot(qv) * inv;
}

struct ClosestPoint {
  Vec3 point;
  double squared_distance;
  std::uint32_t primitive;  // triangle index (surface queries) or vertex index
};

/// Bounding volume hierarchy over a mesh's triangles, or over bare points.
/// Queries are exact; the tree only prunes.
class AabbTree {
 public:
  AabbTree() = default;

  static AabbTree over_triangles(const Mesh& mesh) {
    AabbTree t;
    t.vertices_ = mesh.vertices;
    t.triangles_ = mesh.triangles;
    t.build(mesh.triangles.size());
    return t;
  }

  static AabbTree over_points(std::span<const Point3> points) {
    AabbTree t;
    t.vertices_.assign(points.begin(), points.end());
    t.build(points.size());
    return t;
  }

  bool empty() const { return nodes_.empty(); }
  bool is_surface() const { return !triangles_.empty(); }

  ClosestPoint closest(const Vec3& p) const {
    ClosestPoint best{Vec3::Zero(), std::numeric_limits<double>::infinity(), 0};
    if (nodes_.empty()) return best;
    std::array<std::uint32_t, 128> stack;
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (node.box.squared_distance(p) > best.squared_distance) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
          const std::uint32_t prim = order_[i];
          const Vec3 q = is_surface() ? closest_point_on_triangle(p, vertices_[triangles_[prim][0]],
                                                                  vertices_[triangles_[prim][1]],
                                                                  vertices_[triangles_[prim][2]])
                                      : vertices_[prim];
          const double d = (q - p).squaredNorm();
          // Ties go to the lower primitive index for determinism.
          if (d < best.squared_distance || (d == best.squared_distance && prim < best.primitive))
            best = {q, d, prim};
        }
        continue;
      }
      const std::uint32_t l = node.first, r = node.first + 1;
      const double dl = nodes_[l].box.squared_distance(p), dr = nodes_[r].box.squared_distance(p);
      if (dl < dr) {
        stack[top++] = r;
        stack[top++] = l;
      } else {
        stack[top++] = l;
        stack[top++] = r;
      }
    }
    return best;
  }

  /// Ray parameters of every triangle hit with t > t_min, unsorted.
  void intersect_all(const Vec3& origin, const Vec3& dir, double t_min, std::vector<double>& hits) const {
    hits.clear();
    if (nodes_.empty() || !is_surface()) return;
    const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
    std::array<std::uint32_t, 128> stack;
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!slab_test(node.box, origin, inv)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
          const auto& t = triangles_[order_[i]];
          if (auto hit = intersect_ray_triangle(origin, dir, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
              hit && *hit > t_min)
            hits.push_back(*hit);
        }
        continue;
      }
      stack[top++] = node.first;
      stack[top++] = node.first + 1;
    }
  }

  /// Smallest ray parameter > t_min at which the ray hits a triangle.
  std::optional<double> first_hit(const Vec3& origin, const Vec3& dir, double t_min = 0.0) const {
    std::vector<double> hits;
    intersect_all(origin, dir, t_min, hits);
    if (hits.empty()) return std::nullopt;
    return *std::min_element(hits.begin(), hits.end());
  }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // child index (inner) or order_ offset (leaf)
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  static bool slab_test(const Aabb& b, const Vec3& o, const Vec3& inv) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      double lo = (b.lo[a] - o[a]) * inv[a];
      double hi = (b.hi[a] - o[a]) * inv[a];
      if (lo > hi) std::swap(lo, hi);
      if (std::isnan(lo) || std::isnan(hi)) {
        if (o[a] < b.lo[a] || o[a] > b.hi[a]) return false;
        continue;
      }
      t0 = std::max(t0, lo);
      t1 = std::min(t1, hi);
      if (t0 > t1 * (1.0 + 1e-12) + 1e-12) return false;
    }
    return true;
  }

  Aabb primitive_box(std::uint32_t prim) const {
    Aabb b;
    if (is_surface())
      for (auto idx : triangles_[prim]) b.extend(vertices_[idx]);
    else
      b.extend(vertices_[prim]);
    return b;
  }

  Vec3 primitive_center(std::uint32_t prim) const {
    if (!is_surface()) return vertices_[prim];
    const auto& t = triangles_[prim];
    return (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
  }

  void build(std::size_t count) {
    if (count == 0) return;
    order_.resize(count);
    std::iota(order_.begin(), order_.end(), 0u);
    centers_.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) centers_[i] = primitive_center(i);
    nodes_.reserve(2 * count);
    nodes_.push_back({});
    split(0, 0, static_cast<std::uint32_t>(count), 0);
    centers_.clear();
    centers_.shrink_to_fit();
  }

  void split(std::uint32_t node_idx, std::uint32_t first, std::uint32_t count, int depth) {
    Aabb box, cbox;
    for (std::uint32_t i = first; i < first + count; ++i) {
      box.extend(primitive_box(order_[i]));
      cbox.extend(centers_[order_[i]]);
    }
    nodes_[node_idx].box = box;
    if (count <= kLeafSize || depth >= 60) {
      nodes_[node_idx].first = first;
      nodes_[node_idx].count = count;
      return;
    }
    int axis = 0;
    cbox.extent().maxCoeff(&axis);
    const std::uint32_t mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](std::uint32_t a, std::uint32_t b) {
                       if (centers_[a][axis] != centers_[b][axis]) return centers_[a][axis] < centers_[b][axis];
                       return a < b;
                     });
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    nodes_.push_back({});
    nodes_[node_idx].first = left;
    nodes_[node_idx].count = 0;
    split(left, first, mid - first, depth + 1);
    split(left + 1, mid, first + count - mid, depth + 1);
  }

  static constexpr std::uint32_t kLeafSize = 4;

  std::vector<Point3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> centers_;
  std::vector<Node> nodes_;
};

}  // namespace hdhuman::spatial
