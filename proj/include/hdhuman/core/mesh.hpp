#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hdhuman/core/error.hpp"
#include "hdhuman/core/geometry.hpp"

namespace hdhuman {

using Triangle = std::array<std::uint32_t, 3>;
using Edge = std::pair<std::uint32_t, std::uint32_t>;

/// Per-vertex channel, stored vertex-major (`channels` values per vertex).
struct VertexAttribute {
  int channels = 0;
  std::vector<double> values;

  const double* at(std::size_t vertex) const { return values.data() + vertex * channels; }
  double* at(std::size_t vertex) { return values.data() + vertex * channels; }
};

/// Indexed triangle surface in world coordinates.
struct Mesh {
  std::vector<Point3> vertices;
  std::vector<Triangle> triangles;
  std::map<std::string, VertexAttribute> attributes;

  bool empty() const { return triangles.empty(); }

  bool has_attribute(const std::string& name) const { return attributes.count(name) > 0; }

  void set_attribute(const std::string& name, int channels, std::vector<double> values) {
    if (channels <= 0 || values.size() != vertices.size() * static_cast<std::size_t>(channels))
      throw Error(ErrorCode::kInvalidMesh, "attribute '" + name + "' length mismatch");
    attributes[name] = VertexAttribute{channels, std::move(values)};
  }

  Vec3 corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }

  void validate() const {
    for (const auto& t : triangles)
      for (auto idx : t)
        if (idx >= vertices.size()) throw Error(ErrorCode::kInvalidMesh, "triangle index out of range");
    for (const auto& [name, attr] : attributes)
      if (attr.channels <= 0 || attr.values.size() != vertices.size() * attr.channels)
        throw Error(ErrorCode::kInvalidMesh, "attribute '" + name + "' length mismatch");
    for (const auto& v : vertices)
      if (!v.allFinite()) throw Error(ErrorCode::kInvalidMesh, "non-finite vertex");
  }
};

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

inline double triangle_area(const Mesh& m, std::size_t tri) {
  return triangle_area(m.corner(tri, 0), m.corner(tri, 1), m.corner(tri, 2));
}

/// Drops triangles with repeated indices or zero area. Vertices are kept so
/// attribute channels stay aligned.
inline Mesh& remove_degenerate_triangles(Mesh& mesh) {
  std::erase_if(mesh.triangles, [&](const Triangle& t) {
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) return true;
    return triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) == 0.0;
  });
  return mesh;
}

/// Unique undirected edges, (low, high) sorted.
inline std::vector<Edge> unique_edges(const Mesh& mesh) {
  std::vector<Edge> edges;
  edges.reserve(mesh.triangles.size() * 3);
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      auto a = t[k], b = t[(k + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

/// Every undirected edge used by exactly two triangles.
inline bool is_watertight(const Mesh& mesh) {
  if (mesh.triangles.empty()) return false;
  std::map<Edge, int> uses;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      auto a = t[k], b = t[(k + 1) % 3];
      ++uses[{std::min(a, b), std::max(a, b)}];
    }
  return std::all_of(uses.begin(), uses.end(), [](const auto& kv) { return kv.second == 2; });
}

inline Aabb bounds(const Mesh& mesh) {
  Aabb box;
  for (const auto& v : mesh.vertices) box.extend(v);
  return box;
}

inline double surface_area(const Mesh& mesh) {
  double a = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) a += triangle_area(mesh, i);
  return a;
}

/// Signed enclosed volume; positive for outward-oriented closed meshes.
inline double signed_volume(const Mesh& mesh) {
  double v = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
    v += mesh.corner(i, 0).dot(mesh.corner(i, 1).cross(mesh.corner(i, 2)));
  return v / 6.0;
}

inline Mesh translated(Mesh mesh, const Vec3& offset) {
  for (auto& v : mesh.vertices) v += offset;
  return mesh;
}

// ---------------------------------------------------------------------------
// Primitive generators.

/// Icosahedron subdivided `levels` times and projected onto the sphere.
inline Mesh make_icosphere(int levels, double radius = 1.0, const Vec3& center = Vec3::Zero()) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  m.vertices = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1},  {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& v : m.vertices) v.normalize();
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int level = 0; level < levels; ++level) {
    std::map<Edge, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const Edge key{std::min(a, b), std::max(a, b)};
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(m.vertices.size() - 1);
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& t : m.triangles) {
      const auto ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (auto& v : m.vertices) v = center + radius * v;
  if (signed_volume(m) < 0.0)
    for (auto& t : m.triangles) std::swap(t[1], t[2]);
  return m;
}

/// Axis-aligned square [0,size]^2 in the plane z = height, split into
/// `cells` x `cells` quads of two triangles each.
inline Mesh make_grid_patch(int cells, double size, double height = 0.0) {
  Mesh m;
  const int n = cells + 1;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      m.vertices.emplace_back(size * i / cells, size * j / cells, height);
  auto id = [n](int i, int j) { return static_cast<std::uint32_t>(j * n + i); };
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return m;
}

/// Closed tube swept along a polyline with an elliptical cross-section
/// (radii `ra`, `rb`), capped at both ends. Rings are spaced at most
/// `spacing` apart along each segment.
inline Mesh make_tube(const std::vector<Point3>& path, double ra, double rb, int sides,
                      double spacing) {
  if (path.size() < 2 || sides < 3) throw Error(ErrorCode::kInvalidMesh, "tube needs 2+ points, 3+ sides");
  std::vector<Point3> centers;
  std::vector<Vec3> tangents;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const Vec3 d = path[s + 1] - path[s];
    const int steps = std::max(1, static_cast<int>(std::ceil(d.norm() / spacing)));
    for (int i = 0; i < steps; ++i) {
      centers.push_back(path[s] + d * (static_cast<double>(i) / steps));
      tangents.push_back(d.normalized());
    }
  }
  centers.push_back(path.back());
  tangents.push_back((path.back() - path[path.size() - 2]).normalized());
  // Smooth tangents at segment joins.
  for (std::size_t i = 1; i + 1 < centers.size(); ++i)
    if (tangents[i - 1] != tangents[i]) tangents[i] = (tangents[i - 1] + tangents[i]).normalized();

  Mesh m;
  Vec3 normal = tangents.front().unitOrthogonal();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    // Parallel transport of the section frame.
    normal = (normal - normal.dot(tangents[i]) * tangents[i]).normalized();
    const Vec3 binormal = tangents[i].cross(normal);
    for (int k = 0; k < sides; ++k) {
      const double a = 2.0 * M_PI * k / sides;
      m.vertices.push_back(centers[i] + ra * std::cos(a) * normal + rb * std::sin(a) * binormal);
    }
  }
  const auto rings = static_cast<std::uint32_t>(centers.size());
  const auto n = static_cast<std::uint32_t>(sides);
  for (std::uint32_t r = 0; r + 1 < rings; ++r)
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::uint32_t a = r * n + k, b = r * n + (k + 1) % n;
      const std::uint32_t c = (r + 1) * n + k, d = (r + 1) * n + (k + 1) % n;
      m.triangles.push_back({a, b, d});
      m.triangles.push_back({a, d, c});
    }
  const auto start = static_cast<std::uint32_t>(m.vertices.size());
  m.vertices.push_back(centers.front());
  m.vertices.push_back(centers.back());
  for (std::uint32_t k = 0; k < n; ++k) {
    m.triangles.push_back({start, (k + 1) % n, k});
    m.triangles.push_back({start + 1, (rings - 1) * n + k, (rings - 1) * n + (k + 1) % n});
  }
  if (signed_volume(m) < 0.0)
    for (auto& t : m.triangles) std::swap(t[1], t[2]);
  return m;
}

}  // namespace hdhuman
