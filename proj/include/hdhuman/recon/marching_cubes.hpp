#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "hdhuman/core/mesh.hpp"
#include "hdhuman/recon/mc_tables.hpp"
#include "hdhuman/recon/occupancy.hpp"

namespace hdhuman::recon {

inline constexpr double kDefaultIsoThreshold = 0.5;

namespace detail {

inline constexpr std::array<std::array<int, 3>, 8> kCornerOffset{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};

inline constexpr std::array<std::array<int, 2>, 12> kEdgeCorners{{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}}};

}  // namespace detail

/// Marching cubes over the lattice corners with linear edge interpolation.
/// Corners with value >= threshold are inside. Vertices are shared between
/// neighbouring cells (one per crossed lattice edge, in first-visit order),
/// and triangles are wound so normals point out of the inside region.
inline Mesh extract_surface(const OccupancyField& field, double threshold = kDefaultIsoThreshold) {
  Mesh mesh;
  const auto [nx, ny, nz] = field.resolution;
  const auto corner_id = [&](int i, int j, int k) { return static_cast<std::uint64_t>(field.index(i, j, k)); };
  std::unordered_map<std::uint64_t, std::uint32_t> vertex_of_key;

  // Key of a crossing on lattice edge (a, b): corner ids when the crossing
  // lands exactly on a corner, otherwise (low corner id, axis).
  auto vertex_on_edge = [&](std::array<int, 3> ca, std::array<int, 3> cb) -> std::uint32_t {
    std::uint64_t ia = corner_id(ca[0], ca[1], ca[2]);
    std::uint64_t ib = corner_id(cb[0], cb[1], cb[2]);
    if (ia > ib) {
      std::swap(ia, ib);
      std::swap(ca, cb);
    }
    const double va = field.values[ia], vb = field.values[ib];
    const double t = (threshold - va) / (vb - va);
    int axis = 0;
    while (ca[axis] == cb[axis]) ++axis;
    std::uint64_t key;
    if (t <= 0.0) {
      key = ia << 2 | 3u;
    } else if (t >= 1.0) {
      key = ib << 2 | 3u;
    } else {
      key = ia << 2 | static_cast<std::uint64_t>(axis);
    }
    auto [it, fresh] = vertex_of_key.try_emplace(key, static_cast<std::uint32_t>(mesh.vertices.size()));
    if (fresh) {
      const Point3 pa = field.corner(ca[0], ca[1], ca[2]);
      const Point3 pb = field.corner(cb[0], cb[1], cb[2]);
      mesh.vertices.push_back(t <= 0.0 ? pa : t >= 1.0 ? pb : Point3(pa + t * (pb - pa)));
    }
    return it->second;
  };

  std::array<std::uint32_t, 12> edge_vertex{};
  for (int k = 0; k + 1 < nz; ++k)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        std::array<std::array<int, 3>, 8> corners;
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          corners[c] = {i + detail::kCornerOffset[c][0], j + detail::kCornerOffset[c][1],
                        k + detail::kCornerOffset[c][2]};
          if (field.at(corners[c][0], corners[c][1], corners[c][2]) < threshold) cube |= 1 << c;
        }
        const int edges = mc_tables::kEdgeTable[cube];
        if (edges == 0) continue;
        for (int e = 0; e < 12; ++e)
          if (edges & (1 << e))
            edge_vertex[e] = vertex_on_edge(corners[detail::kEdgeCorners[e][0]], corners[detail::kEdgeCorners[e][1]]);
        const int* tri = mc_tables::kTriTable[cube];
        for (int t = 0; tri[t] != -1; t += 3) {
          const Triangle f{edge_vertex[tri[t]], edge_vertex[tri[t + 1]], edge_vertex[tri[t + 2]]};
          if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) continue;
          mesh.triangles.push_back(f);
        }
      }
  return mesh;
}

}  // namespace hdhuman::recon
